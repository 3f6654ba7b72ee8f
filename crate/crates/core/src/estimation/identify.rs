use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::signal::{convolve, dot, path_propagate, DelayLine, FirFilter, FirPath, NoiseSource};

/// Weight magnitude treated as divergence during adaptive training.
pub const TRAINING_GUARD: f64 = 1e6;

/// Configuration for LMS identification of the secondary path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifySpec {
    pub length: usize,
    pub mu: f64,
    pub iterations: u64,
    pub excitation: NoiseSource,
    pub sample_rate: f64,
}

impl IdentifySpec {
    /// White unit-variance excitation with a step size well inside the LMS bound.
    pub fn white(length: usize, iterations: u64, seed: u64) -> Self {
        Self {
            length,
            mu: 0.1 / length.max(1) as f64,
            iterations,
            excitation: NoiseSource::WhiteGaussian { sigma: 1.0, seed },
            sample_rate: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Identification {
    pub estimate: FirFilter,
    /// `||s_hat - s|| / ||s||`, with the shorter response zero-padded.
    pub misalignment: f64,
}

/// Training configuration for the delayed inverse `c` of the secondary path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseModelSpec {
    pub length: usize,
    pub delay: usize,
    pub mu: f64,
    pub iterations: u64,
    pub excitation: NoiseSource,
    pub sample_rate: f64,
}

impl InverseModelSpec {
    /// Delay at half the length, white unit-variance excitation, and a step size
    /// sized for a unit-energy path.
    pub fn with_length(length: usize) -> Self {
        Self {
            length,
            delay: length / 2,
            mu: 0.1 / length.max(1) as f64,
            iterations: 50_000,
            excitation: NoiseSource::WhiteGaussian { sigma: 1.0, seed: 0x1f },
            sample_rate: 1.0,
        }
    }

    /// Like [`InverseModelSpec::with_length`] with the step size scaled by the path energy.
    pub fn for_path(s: &FirFilter, length: usize) -> Self {
        let mut spec = Self::with_length(length);
        if s.energy() > 0.0 {
            spec.mu /= s.energy();
        }
        spec
    }

    fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(config("inverse model length must be >= 1"));
        }
        if self.delay >= self.length {
            return Err(config(format!(
                "modeling delay {} must be below the inverse length {}",
                self.delay, self.length
            )));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(config(format!("inverse step size must be > 0, got {}", self.mu)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseModel {
    pub filter: FirFilter,
    pub delay: usize,
    /// `||s * c - delta_delay||^2`, evaluated exactly on the trained taps.
    pub squared_error: f64,
}

fn guard(weights: &[f64], iteration: u64) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || w.abs() > TRAINING_GUARD) {
        return Err(Error::Identification {
            iteration,
            reason: format!("weight reached {w}"),
        });
    }
    Ok(())
}

/// LMS identification of `true_path` from its response to the excitation.
pub fn identify_secondary_path(true_path: &FirFilter, spec: &IdentifySpec) -> Result<Identification> {
    if spec.length == 0 {
        return Err(config("identified path length must be >= 1"));
    }
    if !(spec.mu > 0.0 && spec.mu.is_finite()) {
        return Err(config(format!("identification step size must be > 0, got {}", spec.mu)));
    }
    let mut source = spec.excitation.generator(spec.sample_rate)?;
    let mut plant = FirPath::new(true_path.clone());
    let mut line = DelayLine::new(spec.length);
    let mut w = alloc::vec![0.0; spec.length];
    for it in 0..spec.iterations {
        let u = source.next_sample();
        let target = plant.propagate(u)?;
        line.push(u);
        let err = target - dot(&w, line.samples());
        let g = spec.mu * err;
        for (wi, xi) in w.iter_mut().zip(line.samples()) {
            *wi += g * xi;
        }
        guard(&w, it)?;
    }
    let estimate = FirFilter::new(w)?;
    let misalignment = misalignment(&estimate, true_path);
    Ok(Identification { estimate, misalignment })
}

/// Relative misalignment `||a - b|| / ||b||`.
pub fn misalignment(a: &FirFilter, b: &FirFilter) -> f64 {
    let n = a.len().max(b.len());
    let at = |f: &FirFilter, i: usize| f.taps().get(i).copied().unwrap_or(0.0);
    let num: f64 = (0..n)
        .map(|i| {
            let t = at(a, i) - at(b, i);
            t * t
        })
        .sum();
    libm::sqrt(num / b.energy())
}

/// Squared distance of `s * c` from a unit impulse delayed by `delay`.
pub fn inverse_error(s: &FirFilter, c: &FirFilter, delay: usize) -> f64 {
    let mut sc = convolve(s.taps(), c.taps());
    if sc.len() <= delay {
        sc.resize(delay + 1, 0.0);
    }
    sc[delay] -= 1.0;
    sc.iter().map(|v| v * v).sum()
}

/// Adaptive inverse modeling: train `c` so that `s * c` approximates a delayed impulse.
///
/// The excitation drives `s`; `c` filters the path output and adapts towards the
/// excitation delayed by `spec.delay`.
pub fn inverse_model(s: &FirFilter, spec: &InverseModelSpec) -> Result<InverseModel> {
    spec.validate()?;
    if s.is_all_zero() {
        return Err(Error::NoInverse);
    }
    let mu = spec.mu;
    let mut source = spec.excitation.generator(spec.sample_rate)?;
    let mut plant = FirPath::new(s.clone());
    let mut v_line = DelayLine::new(spec.length);
    let mut u_line = DelayLine::new(spec.delay + 1);
    let mut c = alloc::vec![0.0; spec.length];
    for it in 0..spec.iterations {
        let u = source.next_sample();
        u_line.push(u);
        v_line.push(plant.propagate(u)?);
        let desired = u_line.samples()[spec.delay];
        let err = desired - dot(&c, v_line.samples());
        let g = mu * err;
        for (ci, vi) in c.iter_mut().zip(v_line.samples()) {
            *ci += g * vi;
        }
        guard(&c, it)?;
    }
    let filter = FirFilter::new(c)?;
    let squared_error = inverse_error(s, &filter, spec.delay);
    Ok(InverseModel {
        filter,
        delay: spec.delay,
        squared_error,
    })
}

/// Predicted control signal: the disturbance streamed through the inverse model.
pub fn predict_control(c: &FirFilter, d: &[f64]) -> Result<Vec<f64>> {
    path_propagate(c, d)
}
