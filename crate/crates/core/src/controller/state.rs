use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::config::{Algorithm, ConstraintMode, ControllerConfig, LeakShape};
use crate::error::{config, contract, Error, Result};
use crate::estimation::{degree_of_nonlinearity, optimal_gamma, Leak, StatisticsSnapshot};
use crate::linalg::Matrix;
use crate::metrics::{ModeFlag, PowerTracker};
use crate::signal::{clip, dot, DelayLine, FirPath};

/// Weight magnitude that halts a run as diverged.
pub const DIVERGENCE_GUARD: f64 = 1e6;

/// What a controller emits for one input sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    /// Raw control output `w^T x`.
    pub y: f64,
    /// Output after the controller's own clip stage (equal to `y` when it has none).
    pub y_out: f64,
    pub mode: ModeFlag,
}

/// Online leak estimator: frames of the disturbance and of the inverse-model
/// prediction give the power gain, then eta and gamma.
#[derive(Debug, Clone)]
struct OnlineLeak {
    inverse: FirPath,
    frame_len: usize,
    shape: LeakShape,
    count: usize,
    energy_d: f64,
    energy_yd: f64,
    lags: Vec<f64>,
    degenerate_frames: u64,
    last_gain: Option<f64>,
    last_eta: Option<f64>,
}

impl OnlineLeak {
    fn clear(&mut self) {
        self.inverse.reset();
        self.count = 0;
        self.energy_d = 0.0;
        self.energy_yd = 0.0;
        self.lags.iter_mut().for_each(|v| *v = 0.0);
        self.degenerate_frames = 0;
        self.last_gain = None;
        self.last_eta = None;
    }

    /// Accumulate one sample; returns a new leak at frame boundaries.
    fn accumulate(&mut self, d: f64, x: &DelayLine, rho2: f64) -> Result<Option<Leak>> {
        let yd = self.inverse.propagate(d)?;
        self.energy_d += d * d;
        self.energy_yd += yd * yd;
        let xs = x.samples();
        for (acc, xk) in self.lags.iter_mut().zip(xs) {
            *acc += xs[0] * xk;
        }
        self.count += 1;
        if self.count < self.frame_len {
            return Ok(None);
        }
        let k = self.count as f64;
        let result = if self.energy_yd == 0.0 {
            self.degenerate_frames += 1;
            None
        } else {
            let g_s = self.energy_d / self.energy_yd;
            let eta = degree_of_nonlinearity(self.energy_d / k, g_s, rho2)?;
            let r_x = match self.shape {
                LeakShape::Scalar => Leak::Scalar(self.lags[0] / k),
                LeakShape::Matrix => {
                    let lags: Vec<f64> = self.lags.iter().map(|v| v / k).collect();
                    Leak::Matrix(Matrix::toeplitz(&lags))
                }
            };
            self.last_gain = Some(g_s);
            self.last_eta = Some(eta);
            Some(optimal_gamma(g_s, eta, &r_x)?)
        };
        self.count = 0;
        self.energy_d = 0.0;
        self.energy_yd = 0.0;
        self.lags.iter_mut().for_each(|v| *v = 0.0);
        Ok(result)
    }
}

/// Branch information carried from an output to the update that follows it.
#[derive(Debug, Clone, Copy)]
struct Pending {
    y: f64,
    mode: ModeFlag,
}

/// Per-sample adaptive controller for every algorithm of the family.
///
/// [`Controller::step`] takes the newest reference sample together with the error
/// measured after the previous output. It first applies the update for the previous
/// output (that error paired with the buffers and branch of that output), then
/// computes the new output. Callers that can observe the error within the same
/// sample may call [`Controller::output`] and [`Controller::adapt`] directly.
#[derive(Debug, Clone)]
pub struct Controller {
    cfg: ControllerConfig,
    weights: Vec<f64>,
    scratch: Vec<f64>,
    increment: Vec<f64>,
    velocity: Vec<f64>,
    x_line: DelayLine,
    xs_line: DelayLine,
    xp_line: DelayLine,
    tracker: PowerTracker,
    gamma: Leak,
    mode: ModeFlag,
    pending: Option<Pending>,
    steps: u64,
    skipped_updates: u64,
    online: Option<OnlineLeak>,
}

impl Controller {
    pub fn new(cfg: ControllerConfig) -> Result<Self> {
        cfg.validate()?;
        let l = cfg.length;
        let online = if cfg.algorithm == Algorithm::OlfxlmsOnline {
            let inverse = cfg.inverse_model.clone().expect("validated");
            Some(OnlineLeak {
                inverse: FirPath::new(inverse),
                frame_len: cfg.frame_len,
                shape: cfg.leak_shape,
                count: 0,
                energy_d: 0.0,
                energy_yd: 0.0,
                lags: vec![0.0; l],
                degenerate_frames: 0,
                last_gain: None,
                last_eta: None,
            })
        } else {
            None
        };
        Ok(Self {
            weights: vec![0.0; l],
            scratch: vec![0.0; l],
            increment: vec![0.0; l],
            velocity: vec![0.0; l],
            x_line: DelayLine::new(l),
            xs_line: DelayLine::new(cfg.secondary_estimate.len()),
            xp_line: DelayLine::new(l),
            tracker: PowerTracker::new(cfg.forgetting)?,
            gamma: cfg.gamma.clone(),
            mode: ModeFlag::Adapt,
            pending: None,
            steps: 0,
            skipped_updates: 0,
            online,
            cfg,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn algorithm(&self) -> Algorithm {
        self.cfg.algorithm
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, w: &[f64]) -> Result<()> {
        if w.len() != self.weights.len() {
            return Err(contract(format!(
                "expected {} weights, got {}",
                self.weights.len(),
                w.len()
            )));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(contract("weights must be finite"));
        }
        self.weights.copy_from_slice(w);
        Ok(())
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    pub fn gamma(&self) -> &Leak {
        &self.gamma
    }

    /// Scalar summary of the current leak: `gamma`, or `trace(Gamma)/L` for a matrix leak.
    pub fn gamma_level(&self) -> f64 {
        match &self.gamma {
            Leak::Scalar(g) => *g,
            Leak::Matrix(m) => m.trace() / m.dim() as f64,
        }
    }

    pub fn mode(&self) -> ModeFlag {
        self.mode
    }

    pub fn output_power(&self) -> f64 {
        self.tracker.power()
    }

    pub fn reference_line(&self) -> &DelayLine {
        &self.x_line
    }

    pub fn filtered_reference_line(&self) -> &DelayLine {
        &self.xp_line
    }

    /// Updates skipped because a normalized gradient had zero norm.
    pub fn skipped_updates(&self) -> u64 {
        self.skipped_updates
    }

    /// Frames whose predicted control energy was zero (online leak only).
    pub fn degenerate_frames(&self) -> u64 {
        self.online.as_ref().map_or(0, |o| o.degenerate_frames)
    }

    /// Latest frame estimates of the power gain and eta (online leak only).
    pub fn online_estimates(&self) -> Option<(f64, f64)> {
        let o = self.online.as_ref()?;
        Some((o.last_gain?, o.last_eta?))
    }

    /// Set the optimal leak from measured statistics and switch to the offline
    /// optimal-leak algorithm.
    pub fn configure_optimal_leak(&mut self, stats: &StatisticsSnapshot, shape: LeakShape) -> Result<()> {
        let g_s = stats.g_s.ok_or_else(|| config("statistics lack the power gain g_s"))?;
        let eta = stats.eta.ok_or_else(|| config("statistics lack eta"))?;
        let r_x = match shape {
            LeakShape::Scalar => Leak::Scalar(stats.sigma_x2.ok_or_else(|| config("statistics lack sigma_x2"))?),
            LeakShape::Matrix => {
                let m = stats.r_x.clone().ok_or_else(|| config("statistics lack r_x"))?;
                if m.dim() != self.cfg.length {
                    return Err(config(format!(
                        "r_x is {0}x{0}, controller length is {1}",
                        m.dim(),
                        self.cfg.length
                    )));
                }
                Leak::Matrix(m)
            }
        };
        let gamma = optimal_gamma(g_s, eta, &r_x)?;
        if self.cfg.mu <= 0.0 || !self.cfg.mu.is_finite() {
            return Err(config("mu must be positive for the optimal leaky controller"));
        }
        self.cfg.algorithm = Algorithm::Olfxlms;
        self.cfg.gamma = gamma.clone();
        self.gamma = gamma;
        Ok(())
    }

    /// Zero the weights, buffers and trackers; keep the configuration.
    pub fn reset(&mut self) {
        self.weights.iter_mut().for_each(|w| *w = 0.0);
        self.velocity.iter_mut().for_each(|v| *v = 0.0);
        self.x_line.clear();
        self.xs_line.clear();
        self.xp_line.clear();
        self.tracker.reset();
        self.gamma = self.cfg.gamma.clone();
        self.mode = ModeFlag::Adapt;
        self.pending = None;
        self.steps = 0;
        self.skipped_updates = 0;
        if let Some(o) = self.online.as_mut() {
            o.clear();
        }
    }

    /// Apply the pending update with error `e`, then produce the output for `x`.
    pub fn step(&mut self, x: f64, e: f64) -> Result<StepOutput> {
        self.adapt(e)?;
        self.output(x)
    }

    /// [`Controller::step`] for the online leak, which also consumes a disturbance estimate.
    pub fn step_with_disturbance(&mut self, x: f64, e: f64, d_estimate: f64) -> Result<StepOutput> {
        self.adapt(e)?;
        let out = self.output(x)?;
        self.observe_disturbance(d_estimate)?;
        Ok(out)
    }

    /// Feed one disturbance sample to the online leak estimator. No-op for other algorithms.
    pub fn observe_disturbance(&mut self, d: f64) -> Result<()> {
        let rho2 = self.cfg.rho * self.cfg.rho;
        if let Some(online) = self.online.as_mut() {
            if let Some(g) = online.accumulate(d, &self.x_line, rho2)? {
                self.gamma = g;
            }
        }
        Ok(())
    }

    /// Push `x`, form the filtered reference, and compute the control output.
    pub fn output(&mut self, x: f64) -> Result<StepOutput> {
        if !x.is_finite() {
            return Err(self.diverged(format!("non-finite reference sample {x}")));
        }
        self.x_line.push(x);
        self.xs_line.push(x);
        let xp = dot(self.cfg.secondary_estimate.taps(), self.xs_line.samples());
        self.xp_line.push(xp);

        let alg = self.cfg.algorithm;
        let y = if alg == Algorithm::None {
            0.0
        } else {
            dot(&self.weights, self.x_line.samples())
        };
        if !y.is_finite() {
            return Err(self.diverged(format!("non-finite control output {y}")));
        }
        let power = self.tracker.update(y);
        let rho = self.cfg.rho;
        let mode = if alg.is_two_grad() {
            let within = match self.cfg.constraint_mode {
                ConstraintMode::InstantaneousAmplitude => y.abs() <= rho,
                ConstraintMode::AveragePower => power <= rho * rho,
            };
            if within {
                ModeFlag::Adapt
            } else {
                ModeFlag::Constrain
            }
        } else {
            ModeFlag::Adapt
        };
        let y_out = if alg.clips_output() { clip(y, rho) } else { y };
        self.mode = mode;
        self.steps += 1;
        if alg != Algorithm::None {
            self.pending = Some(Pending { y, mode });
        }
        Ok(StepOutput { y, y_out, mode })
    }

    /// Update the weights with the error `e` that followed the latest output.
    pub fn adapt(&mut self, e: f64) -> Result<()> {
        let Some(p) = self.pending.take() else {
            return Ok(());
        };
        if !e.is_finite() {
            return Err(self.diverged(format!("non-finite error sample {e}")));
        }
        self.scratch.copy_from_slice(&self.weights);
        match self.cfg.algorithm {
            Algorithm::None => return Ok(()),
            Algorithm::Fxlms | Algorithm::ClippingFxlms => {
                let g = self.cfg.mu * e;
                for (w, xp) in self.scratch.iter_mut().zip(self.xp_line.samples()) {
                    *w += g * xp;
                }
            }
            Algorithm::Leaky | Algorithm::Olfxlms | Algorithm::OlfxlmsOnline => self.leaky_update(e),
            Algorithm::TwoGrad => {
                if self.two_grad_increment(p, e) {
                    for (w, d) in self.scratch.iter_mut().zip(&self.increment) {
                        *w += d;
                    }
                }
            }
            Algorithm::TwoGradMomentum => {
                if !self.two_grad_increment(p, e) {
                    self.increment.iter_mut().for_each(|d| *d = 0.0);
                }
                let beta = self.cfg.momentum;
                for ((w, v), d) in self
                    .scratch
                    .iter_mut()
                    .zip(self.velocity.iter_mut())
                    .zip(&self.increment)
                {
                    *v = beta * *v + d;
                    *w += *v;
                }
            }
        }
        self.commit()
    }

    /// `w <- (1 - mu gamma) w + mu e x'`, or `(I - mu Gamma) w + mu e x'` for a matrix leak.
    fn leaky_update(&mut self, e: f64) {
        let mu = self.cfg.mu;
        let g = mu * e;
        match &self.gamma {
            Leak::Scalar(gamma) => {
                let decay = 1.0 - mu * gamma;
                for (w, xp) in self.scratch.iter_mut().zip(self.xp_line.samples()) {
                    *w = *w * decay + g * xp;
                }
            }
            Leak::Matrix(m) => {
                let gw = m.mul_vec(&self.weights);
                for ((w, xp), d) in self.scratch.iter_mut().zip(self.xp_line.samples()).zip(&gw) {
                    *w = (*w - mu * d) + g * xp;
                }
            }
        }
    }

    /// Two-gradient increment for the branch chosen at output time. Returns false
    /// when a normalized step is skipped for a zero gradient.
    fn two_grad_increment(&mut self, p: Pending, e: f64) -> bool {
        let inc = &mut self.increment;
        let normalized = self.cfg.constraint_mode == ConstraintMode::AveragePower;
        let (scale, dir) = match p.mode {
            ModeFlag::Adapt => (self.cfg.mu1 * e, self.xp_line.samples()),
            ModeFlag::Constrain => (-(self.cfg.mu2 * p.y), self.x_line.samples()),
        };
        if normalized {
            let step = match p.mode {
                ModeFlag::Adapt => self.cfg.mu1,
                ModeFlag::Constrain => self.cfg.mu2,
            };
            let norm = libm::sqrt(dot(dir, dir));
            if scale == 0.0 || norm == 0.0 {
                inc.iter_mut().for_each(|d| *d = 0.0);
                self.skipped_updates += 1;
                return false;
            }
            let k = 0.5 * step * scale.signum() / norm;
            for (d, v) in inc.iter_mut().zip(dir) {
                *d = k * v;
            }
        } else {
            for (d, v) in inc.iter_mut().zip(dir) {
                *d = scale * v;
            }
        }
        true
    }

    fn commit(&mut self) -> Result<()> {
        if let Some(bad) = self
            .scratch
            .iter()
            .find(|w| !w.is_finite() || w.abs() > DIVERGENCE_GUARD)
        {
            let reason = format!("weight magnitude {bad} exceeds guard {DIVERGENCE_GUARD:e}");
            return Err(self.diverged(reason));
        }
        core::mem::swap(&mut self.weights, &mut self.scratch);
        Ok(())
    }

    fn diverged(&self, reason: alloc::string::String) -> Error {
        Error::Divergence {
            step: self.steps,
            reason,
            last_weights: self.weights.clone(),
        }
    }
}
