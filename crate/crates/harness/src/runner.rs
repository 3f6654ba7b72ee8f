//! Turning a configuration into a runnable scenario, tuning the leak, and running.

use std::path::Path;

use anc_core::controller::{Algorithm, ControllerConfig, LeakShape};
use anc_core::estimation::{
    band_power_gain, degree_of_nonlinearity, estimate_statistics, frame_power_gain, identify_secondary_path,
    inverse_model, optimal_gamma, optimal_lambda, predict_control, Identification, IdentifySpec, InverseModel,
    InverseModelSpec, Leak, StatisticsSnapshot,
};
use anc_core::metrics::RunSummary;
use anc_core::signal::{FirFilter, NoiseSource, SaturationModel};
use anc_core::sim::{open_loop_signals, run_simulation, Scenario, SimulationOutcome};
use serde::{Deserialize, Serialize};

use crate::config::{EstimateConfig, InverseConfig, SaturationKind, ScenarioConfig, TuneConfig, TuneMethod};
use crate::error::{ConfigError, HarnessError, Result};

/// Grid used for band-integral power gains.
pub const BAND_GRID: usize = 8192;

/// Seed offsets keep the identification and inverse-model excitations
/// independent of the scenario noise when no explicit seed is set.
const IDENTIFY_SEED_SALT: u64 = 0x1d3a_5eed;
const INVERSE_SEED_SALT: u64 = 0x17e5_5eed;

/// A configuration resolved into core types, plus what it took to get there.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub identification: Option<Identification>,
    pub inverse: Option<InverseModel>,
    pub tuning: Option<StatisticsSnapshot>,
    /// Threshold used for the violation ratio in summaries.
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub prepared: Prepared,
    pub outcome: SimulationOutcome,
    pub summary: RunSummary,
}

/// Effective parameters of a run after defaults, identification and tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParameters {
    pub noise: NoiseSource,
    pub secondary_estimate: FirFilter,
    pub saturation: SaturationModel,
    pub gamma: Leak,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identification_misalignment: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inverse_squared_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuning: Option<StatisticsSnapshot>,
}

impl Prepared {
    pub fn resolved(&self) -> ResolvedParameters {
        let c = &self.scenario.controller;
        ResolvedParameters {
            noise: self.scenario.noise.clone(),
            secondary_estimate: c.secondary_estimate.clone(),
            saturation: self.scenario.saturation,
            gamma: c.gamma.clone(),
            rho: c.rho.is_finite().then_some(c.rho),
            identification_misalignment: self.identification.as_ref().map(|i| i.misalignment),
            inverse_squared_error: self.inverse.as_ref().map(|i| i.squared_error),
            tuning: self.tuning.clone(),
        }
    }
}

fn fir(taps: &[f64], key: &str) -> Result<FirFilter> {
    FirFilter::new(taps.to_vec()).map_err(|e| ConfigError::single(key, e.to_string()).into())
}

/// Resolve `cfg` into a scenario, running identification, inverse-model training
/// and leak tuning as the configuration asks. `base_dir` anchors relative paths.
pub fn prepare(cfg: &ScenarioConfig, base_dir: Option<&Path>) -> Result<Prepared> {
    let mut prepared = prepare_untuned(cfg)?;
    let c = &cfg.controller;
    if c.algorithm == Algorithm::Olfxlms && c.gamma.is_none() {
        let snapshot = match &c.leak_snapshot {
            Some(file) => load_snapshot(&base_dir.map(|d| d.join(file)).unwrap_or_else(|| file.into()))?,
            None => {
                let tune = c.tune.clone().unwrap_or_default();
                measure(cfg, &prepared, &tune, tune.method)?
            }
        };
        let gamma = snapshot
            .gamma_o
            .clone()
            .ok_or_else(|| ConfigError::single("controller.leak_snapshot", "snapshot has no gamma_o entry"))?;
        prepared.scenario.controller.gamma = gamma;
        prepared.tuning = Some(snapshot);
        check_controller(&prepared.scenario.controller)?;
    }
    Ok(prepared)
}

fn load_snapshot(path: &Path) -> Result<StatisticsSnapshot> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| ConfigError::single("controller.leak_snapshot", format!("{}: {e}", path.display())).into())
}

fn check_controller(c: &ControllerConfig) -> Result<()> {
    c.validate()
        .map_err(|e| ConfigError::single("controller", e.to_string()).into())
}

fn prepare_untuned(cfg: &ScenarioConfig) -> Result<Prepared> {
    let primary = fir(&cfg.paths.primary, "paths.primary")?;
    let secondary = fir(&cfg.paths.secondary, "paths.secondary")?;
    let mut identification = None;
    let estimate = match &cfg.paths.estimate {
        EstimateConfig::Exact(_) => secondary.clone(),
        EstimateConfig::Taps(t) => fir(t, "paths.estimate")?,
        EstimateConfig::Identify { .. } => {
            let id = identify(cfg)?;
            let est = id.estimate.clone();
            identification = Some(id);
            est
        }
    };

    let c = &cfg.controller;
    let mut cc = ControllerConfig::new(c.algorithm, c.length, estimate);
    cc.mu = c.mu;
    cc.mu1 = c.mu1();
    cc.mu2 = c.mu2();
    cc.gamma = c.gamma.clone().unwrap_or(Leak::Scalar(0.0));
    cc.rho = c.rho();
    cc.constraint_mode = c.constraint_mode;
    cc.forgetting = c.forgetting;
    cc.momentum = c.momentum;
    cc.frame_len = c.frame_len;
    cc.leak_shape = c.leak_shape;

    let mut inverse = None;
    if c.algorithm == Algorithm::OlfxlmsOnline {
        let spec = inverse_spec(c.inverse.as_ref(), &cc.secondary_estimate, cfg.seed);
        let model = inverse_model(&cc.secondary_estimate, &spec)
            .map_err(|e| HarnessError::core("inverse-model training", e))?;
        cc.inverse_model = Some(model.filter.clone());
        inverse = Some(model);
    }
    check_controller(&cc)?;

    let sat_rho = cfg.saturation.rho.or(c.rho);
    let saturation = match (cfg.saturation.kind, sat_rho) {
        (SaturationKind::None, _) | (_, None) => Ok(SaturationModel::None),
        (SaturationKind::HardClip, Some(r)) => SaturationModel::hard_clip(r),
        (SaturationKind::Tanh, Some(r)) => SaturationModel::scaled_tanh(r),
    }
    .map_err(|e| ConfigError::single("saturation.rho", e.to_string()))?;

    let scenario = Scenario {
        sample_rate: cfg.sample_rate,
        num_samples: cfg.num_samples,
        noise: cfg.noise_source(),
        primary_path: primary,
        secondary_path: secondary,
        saturation,
        controller: cc,
        disturbance_feed: c.disturbance_feed,
    };
    Ok(Prepared {
        scenario,
        identification,
        inverse,
        tuning: None,
        rho: c.rho.or(cfg.saturation.rho).unwrap_or(f64::INFINITY),
    })
}

fn inverse_spec(inv: Option<&InverseConfig>, shat: &FirFilter, seed: u64) -> InverseModelSpec {
    let default = InverseConfig::default();
    let inv = inv.unwrap_or(&default);
    let mut spec = InverseModelSpec::for_path(shat, inv.length);
    if let Some(d) = inv.delay {
        spec.delay = d;
    }
    if let Some(mu) = inv.mu {
        spec.mu = mu;
    }
    if let Some(it) = inv.iterations {
        spec.iterations = it;
    }
    spec.excitation = NoiseSource::WhiteGaussian {
        sigma: 1.0,
        seed: inv.seed.unwrap_or(seed ^ INVERSE_SEED_SALT),
    };
    spec
}

/// Measure the uncontrolled scenario and compute `G_s`, `eta`, `lambda_o` and
/// `gamma_o` with the chosen power-gain method.
pub fn tune_leak(cfg: &ScenarioConfig, method: TuneMethod) -> Result<StatisticsSnapshot> {
    let prepared = prepare_untuned(cfg)?;
    let tune = cfg.controller.tune.clone().unwrap_or_default();
    measure(cfg, &prepared, &tune, method)
}

fn measure(
    cfg: &ScenarioConfig,
    prepared: &Prepared,
    tune: &TuneConfig,
    method: TuneMethod,
) -> Result<StatisticsSnapshot> {
    let ctx = format!("tune-leak ({})", method.name());
    let rho = cfg
        .controller
        .rho
        .ok_or_else(|| ConfigError::single("controller.rho", "leak tuning needs a finite threshold"))?;
    let scenario = &prepared.scenario;
    let shat = &scenario.controller.secondary_estimate;
    let taps = scenario.controller.length;
    let samples = tune.samples.unwrap_or(cfg.num_samples);
    let (x, d, xp) = open_loop_signals(scenario, samples).map_err(|e| HarnessError::core(&ctx, e))?;
    let mut snap = estimate_statistics(&x, &d, &xp, taps).map_err(|e| HarnessError::core(&ctx, e))?;

    let g_s = match method {
        TuneMethod::Band => band_power_gain(shat, tune.band[0], tune.band[1], BAND_GRID),
        TuneMethod::Frame => {
            let spec = inverse_spec(cfg.controller.inverse.as_ref(), shat, cfg.seed);
            inverse_model(shat, &spec)
                .and_then(|c| predict_control(&c.filter, &d))
                .and_then(|yd| frame_power_gain(&d, &yd))
        }
    }
    .map_err(|e| HarnessError::core(&ctx, e))?;

    let sigma_d2 = snap.sigma_d2.expect("statistics carry sigma_d2");
    let eta = degree_of_nonlinearity(sigma_d2, g_s, rho * rho).map_err(|e| HarnessError::core(&ctx, e))?;
    let lambda = optimal_lambda(shat, eta).map_err(|e| HarnessError::core(&ctx, e))?;
    let r_x = match cfg.controller.leak_shape {
        LeakShape::Scalar => Leak::Scalar(snap.sigma_x2.expect("statistics carry sigma_x2")),
        LeakShape::Matrix => Leak::Matrix(snap.r_x.clone().expect("statistics carry r_x")),
    };
    let gamma = optimal_gamma(g_s, eta, &r_x).map_err(|e| HarnessError::core(&ctx, e))?;
    snap.g_s = Some(g_s);
    snap.eta = Some(eta);
    snap.lambda_o = Some(lambda);
    snap.gamma_o = Some(gamma);
    Ok(snap)
}

/// Prepare and run a configuration. A divergent run is not an error here: the
/// outcome carries the truncated log and the divergence.
pub fn run_config(cfg: &ScenarioConfig, base_dir: Option<&Path>) -> Result<RunOutput> {
    let prepared = prepare(cfg, base_dir)?;
    let outcome = run_simulation(&prepared.scenario).map_err(|e| HarnessError::core("simulation", e))?;
    let summary = outcome.log.summarize(&cfg.metrics, prepared.rho);
    Ok(RunOutput {
        prepared,
        outcome,
        summary,
    })
}

/// Identify the secondary path with the configured (or default) settings.
pub fn identify(cfg: &ScenarioConfig) -> Result<Identification> {
    let secondary = fir(&cfg.paths.secondary, "paths.secondary")?;
    let seed = cfg.seed ^ IDENTIFY_SEED_SALT;
    let spec = match &cfg.paths.estimate {
        EstimateConfig::Identify { identify } => {
            let mut spec = IdentifySpec::white(identify.length, identify.iterations, identify.seed.unwrap_or(seed));
            if let Some(mu) = identify.mu {
                spec.mu = mu;
            }
            spec
        }
        _ => IdentifySpec::white(secondary.len(), 20_000, seed),
    };
    identify_secondary_path(&secondary, &spec).map_err(|e| HarnessError::core("secondary-path identification", e))
}
