//! Scenario configuration documents.
//!
//! The primary encoding is TOML; JSON with the same schema is accepted too.
//! Every table rejects unknown keys. A minimal document:
//!
//! ```toml
//! num_samples = 20000
//!
//! [noise]
//! kind = "white"
//!
//! [paths]
//! primary = [0.0, 0.0, 0.9, 0.3]
//! secondary = [0.0, 0.9]
//!
//! [controller]
//! algorithm = "fxlms"
//! ```
//!
//! Defaults: `sample_rate = 8000`, `seed = 0`, noise `sigma = 1`, sine
//! `amplitude = 1`, `paths.estimate = "exact"`, saturation `kind = "hard-clip"`
//! at `controller.rho` (identity when no `rho` is set), `controller.length = 16`,
//! `mu = 0.01`, `mu1 = mu2 = mu`, `gamma = 0`, `forgetting = 0.999`,
//! `momentum = 0`, `frame_len = 1024`, and the metric settings of
//! [`MetricsSettings::default`].

use std::f64::consts::PI;

use anc_core::controller::{Algorithm, ConstraintMode, LeakShape};
use anc_core::estimation::Leak;
use anc_core::metrics::MetricsSettings;
use anc_core::signal::NoiseSource;
use anc_core::sim::DisturbanceFeed;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    /// JSON when the document starts with `{`, TOML otherwise.
    pub fn sniff(text: &str) -> Self {
        if text.trim_start().starts_with('{') {
            Format::Json
        } else {
            Format::Toml
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_sample_rate")]
    pub sample_rate: f64,
    pub num_samples: usize,
    /// Seed for every noise source that does not set its own.
    #[serde(default)]
    pub seed: u64,
    pub noise: NoiseConfig,
    pub paths: PathsConfig,
    #[serde(default)]
    pub saturation: SaturationConfig,
    pub controller: ControllerSection,
    #[serde(default)]
    pub metrics: MetricsSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseConfig {
    White {
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Sine {
        frequency: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    BandLimited {
        #[serde(default = "one")]
        sigma: f64,
        shaping: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Mixture {
        components: Vec<NoiseConfig>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub primary: Vec<f64>,
    pub secondary: Vec<f64>,
    #[serde(default)]
    pub estimate: EstimateConfig,
}

/// Secondary-path estimate: `"exact"`, explicit taps, or `{ identify = {...} }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EstimateConfig {
    Exact(ExactKeyword),
    Taps(Vec<f64>),
    Identify { identify: IdentifyConfig },
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig::Exact(ExactKeyword::Exact)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactKeyword {
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifyConfig {
    pub length: usize,
    #[serde(default = "default_identify_iterations")]
    pub iterations: u64,
    /// Defaults to `0.1 / length`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaturationKind {
    #[default]
    HardClip,
    Tanh,
    None,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaturationConfig {
    #[serde(default)]
    pub kind: SaturationKind,
    /// Defaults to `controller.rho`.
    #[serde(default, with = "threshold", skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub algorithm: Algorithm,
    #[serde(default = "default_length")]
    pub length: usize,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
    /// Fixed leak; for `olfxlms` an absent leak is tuned before the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Leak>,
    /// Amplitude threshold; a number or `"inf"` (also TOML's `inf`).
    #[serde(default, with = "threshold", skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default)]
    pub constraint_mode: ConstraintMode,
    #[serde(default = "default_forgetting")]
    pub forgetting: f64,
    #[serde(default)]
    pub momentum: f64,
    #[serde(default = "default_frame_len")]
    pub frame_len: usize,
    #[serde(default)]
    pub leak_shape: LeakShape,
    #[serde(default)]
    pub disturbance_feed: DisturbanceFeed,
    /// Snapshot file written by `tune-leak`; relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leak_snapshot: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<InverseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tune: Option<TuneConfig>,
}

impl ControllerSection {
    pub fn mu1(&self) -> f64 {
        self.mu1.unwrap_or(self.mu)
    }

    pub fn mu2(&self) -> f64 {
        self.mu2.unwrap_or(self.mu)
    }

    pub fn rho(&self) -> f64 {
        self.rho.unwrap_or(f64::INFINITY)
    }
}

/// Training settings of the secondary-path inverse model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseConfig {
    #[serde(default = "default_inverse_length")]
    pub length: usize,
    /// Defaults to `length / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<usize>,
    /// Defaults to `0.1 / (length * energy of the path)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self {
            length: default_inverse_length(),
            delay: None,
            mu: None,
            iterations: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TuneMethod {
    /// Integrate `|S|^2` over the control band.
    #[default]
    Band,
    /// Ratio of disturbance power to the inverse-model prediction power.
    Frame,
}

impl TuneMethod {
    pub fn name(self) -> &'static str {
        match self {
            TuneMethod::Band => "band",
            TuneMethod::Frame => "frame",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    #[serde(default)]
    pub method: TuneMethod,
    /// Length of the pre-control measurement; defaults to the run length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Control band `[omega1, omega2]` in rad/sample.
    #[serde(default = "full_band")]
    pub band: [f64; 2],
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            method: TuneMethod::Band,
            samples: None,
            band: full_band(),
        }
    }
}

/// Thresholds may be infinite; JSON has no infinity, so it travels as `"inf"`.
mod threshold {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if x.is_infinite() && *x > 0.0 => s.serialize_some("inf"),
            Some(x) => s.serialize_some(x),
            None => s.serialize_none(),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Number(x)) => Ok(Some(x)),
            Some(Repr::Text(t)) if t == "inf" => Ok(Some(f64::INFINITY)),
            Some(Repr::Text(t)) => Err(D::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

fn default_sample_rate() -> f64 {
    8000.0
}
fn one() -> f64 {
    1.0
}
fn default_identify_iterations() -> u64 {
    20_000
}
fn default_length() -> usize {
    16
}
fn default_mu() -> f64 {
    0.01
}
fn default_forgetting() -> f64 {
    0.999
}
fn default_frame_len() -> usize {
    1024
}
fn default_inverse_length() -> usize {
    32
}
fn full_band() -> [f64; 2] {
    [0.0, PI]
}

/// Parse and validate a configuration document.
pub fn parse_scenario(text: &str, format: Format) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = match format {
        Format::Toml => toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?,
        Format::Json => serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl ScenarioConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    /// Check every constraint and report all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut v = Vec::new();
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            v.push(Violation::new("sample_rate", "must be positive and finite"));
        }
        if self.num_samples == 0 {
            v.push(Violation::new("num_samples", "must be at least 1"));
        }
        check_noise(&self.noise, "noise", self.sample_rate, &mut v);
        check_taps(&self.paths.primary, "paths.primary", &mut v);
        check_taps(&self.paths.secondary, "paths.secondary", &mut v);
        match &self.paths.estimate {
            EstimateConfig::Exact(_) => {}
            EstimateConfig::Taps(t) => check_taps(t, "paths.estimate", &mut v),
            EstimateConfig::Identify { identify } => {
                if identify.length == 0 {
                    v.push(Violation::new("paths.estimate.identify.length", "must be at least 1"));
                }
                if identify.iterations == 0 {
                    v.push(Violation::new(
                        "paths.estimate.identify.iterations",
                        "must be at least 1",
                    ));
                }
                check_positive(identify.mu, "paths.estimate.identify.mu", &mut v);
            }
        }
        check_positive(self.saturation.rho, "saturation.rho", &mut v);
        self.check_controller(&mut v);
        let m = &self.metrics;
        if !(m.steady_fraction > 0.0 && m.steady_fraction <= 1.0) {
            v.push(Violation::new("metrics.steady_fraction", "must lie in (0, 1]"));
        }
        if m.convergence_window == Some(0) {
            v.push(Violation::new("metrics.convergence_window", "must be at least 1"));
        }
        if !(m.convergence_threshold_db > 0.0 && m.convergence_threshold_db.is_finite()) {
            v.push(Violation::new("metrics.convergence_threshold_db", "must be positive"));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(v))
        }
    }

    fn check_controller(&self, v: &mut Vec<Violation>) {
        let c = &self.controller;
        let alg = c.algorithm;
        if c.length == 0 {
            v.push(Violation::new("controller.length", "must be at least 1"));
        }
        check_positive(Some(c.mu), "controller.mu", v);
        check_positive(c.mu1, "controller.mu1", v);
        check_positive(c.mu2, "controller.mu2", v);
        check_positive(c.rho, "controller.rho", v);
        let tuned_olfxlms = alg == Algorithm::Olfxlms && c.gamma.is_none() && c.leak_snapshot.is_none();
        if c.rho.is_none() && (alg.needs_rho() || tuned_olfxlms) {
            v.push(Violation::new(
                "controller.rho",
                format!("required by algorithm \"{}\"", alg.name()),
            ));
        }
        if !(c.forgetting > 0.0 && c.forgetting < 1.0) {
            v.push(Violation::new("controller.forgetting", "must lie in (0, 1)"));
        }
        if !(c.momentum >= 0.0 && c.momentum < 1.0) {
            v.push(Violation::new("controller.momentum", "must lie in [0, 1)"));
        }
        if c.frame_len == 0 {
            v.push(Violation::new("controller.frame_len", "must be at least 1"));
        }
        match &c.gamma {
            Some(Leak::Scalar(g)) if !(*g >= 0.0 && g.is_finite()) => {
                v.push(Violation::new("controller.gamma", "must be finite and >= 0"));
            }
            Some(Leak::Matrix(m)) if m.dim() != c.length => {
                v.push(Violation::new(
                    "controller.gamma",
                    format!("leak matrix is {0}x{0}, controller.length is {1}", m.dim(), c.length),
                ));
            }
            _ => {}
        }
        if c.gamma.is_some() && c.leak_snapshot.is_some() {
            v.push(Violation::new(
                "controller.leak_snapshot",
                "conflicts with controller.gamma",
            ));
        }
        if let Some(inv) = &c.inverse {
            if inv.length == 0 {
                v.push(Violation::new("controller.inverse.length", "must be at least 1"));
            }
            if let Some(d) = inv.delay {
                if d >= inv.length {
                    v.push(Violation::new(
                        "controller.inverse.delay",
                        format!("must be below controller.inverse.length = {}", inv.length),
                    ));
                }
            }
            check_positive(inv.mu, "controller.inverse.mu", v);
            if inv.iterations == Some(0) {
                v.push(Violation::new("controller.inverse.iterations", "must be at least 1"));
            }
        }
        if let Some(t) = &c.tune {
            let [w1, w2] = t.band;
            if !(0.0 <= w1 && w1 < w2 && w2 <= PI) {
                v.push(Violation::new(
                    "controller.tune.band",
                    "must satisfy 0 <= omega1 < omega2 <= pi",
                ));
            }
            if t.samples == Some(0) {
                v.push(Violation::new("controller.tune.samples", "must be at least 1"));
            }
        }
    }

    /// The noise source with every missing seed filled in from `self.seed`.
    pub fn noise_source(&self) -> NoiseSource {
        resolve_noise(&self.noise, self.seed)
    }
}

fn resolve_noise(n: &NoiseConfig, seed: u64) -> NoiseSource {
    match n {
        NoiseConfig::White { sigma, seed: s } => NoiseSource::WhiteGaussian {
            sigma: *sigma,
            seed: s.unwrap_or(seed),
        },
        NoiseConfig::Sine {
            frequency,
            amplitude,
            phase,
        } => NoiseSource::Sine {
            frequency: *frequency,
            amplitude: *amplitude,
            phase: *phase,
        },
        NoiseConfig::BandLimited {
            sigma,
            shaping,
            seed: s,
        } => NoiseSource::BandLimited {
            seed: s.unwrap_or(seed),
            shaping: anc_core::signal::FirFilter::new(shaping.clone()).expect("validated shaping filter"),
            sigma: *sigma,
        },
        // Components get distinct default seeds so they stay independent.
        NoiseConfig::Mixture { components } => NoiseSource::Mixture {
            components: components
                .iter()
                .enumerate()
                .map(|(i, c)| resolve_noise(c, seed.wrapping_add(i as u64)))
                .collect(),
        },
    }
}

fn check_noise(n: &NoiseConfig, key: &str, fs: f64, v: &mut Vec<Violation>) {
    match n {
        NoiseConfig::White { sigma, .. } => check_sigma(*sigma, key, v),
        NoiseConfig::BandLimited { sigma, shaping, .. } => {
            check_sigma(*sigma, key, v);
            check_taps(shaping, &format!("{key}.shaping"), v);
        }
        NoiseConfig::Sine {
            frequency,
            amplitude,
            phase,
        } => {
            if !(*frequency >= 0.0 && *frequency < fs / 2.0) {
                v.push(Violation::new(
                    format!("{key}.frequency"),
                    format!("must lie in [0, sample_rate/2 = {})", fs / 2.0),
                ));
            }
            if !amplitude.is_finite() {
                v.push(Violation::new(format!("{key}.amplitude"), "must be finite"));
            }
            if !phase.is_finite() {
                v.push(Violation::new(format!("{key}.phase"), "must be finite"));
            }
        }
        NoiseConfig::Mixture { components } => {
            if components.is_empty() {
                v.push(Violation::new(format!("{key}.components"), "must not be empty"));
            }
            for (i, c) in components.iter().enumerate() {
                check_noise(c, &format!("{key}.components[{i}]"), fs, v);
            }
        }
    }
}

fn check_sigma(sigma: f64, key: &str, v: &mut Vec<Violation>) {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        v.push(Violation::new(format!("{key}.sigma"), "must be finite and >= 0"));
    }
}

fn check_taps(taps: &[f64], key: &str, v: &mut Vec<Violation>) {
    if taps.is_empty() {
        v.push(Violation::new(key, "must contain at least one tap"));
    } else if taps.iter().any(|t| !t.is_finite()) {
        v.push(Violation::new(key, "taps must be finite"));
    }
}

fn check_positive(value: Option<f64>, key: &str, v: &mut Vec<Violation>) {
    if let Some(x) = value {
        if !(x > 0.0) || x.is_nan() {
            v.push(Violation::new(key, "must be positive"));
        }
    }
}
