//! Run-time and post-hoc performance measures.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Noise reduction reported when the residual power is exactly zero.
pub const NR_CAP_DB: f64 = 120.0;

/// Branch taken by a controller on a given sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeFlag {
    #[default]
    Adapt,
    Constrain,
}

impl ModeFlag {
    pub fn code(self) -> u8 {
        match self {
            ModeFlag::Adapt => 0,
            ModeFlag::Constrain => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ModeFlag::Adapt),
            1 => Some(ModeFlag::Constrain),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseReduction {
    pub db: f64,
    /// Set when the residual was zero and `db` holds [`NR_CAP_DB`].
    pub capped: bool,
}

/// `10 log10(d_power / e_power)`, capped at [`NR_CAP_DB`].
pub fn noise_reduction_db(d_power: f64, e_power: f64) -> Result<NoiseReduction> {
    if !(d_power > 0.0) {
        return Err(Error::UndefinedMetric(format!(
            "disturbance power {d_power} is not positive"
        )));
    }
    if !(e_power >= 0.0) {
        return Err(Error::UndefinedMetric(format!("error power {e_power} is negative")));
    }
    if e_power == 0.0 {
        return Ok(NoiseReduction {
            db: NR_CAP_DB,
            capped: true,
        });
    }
    let db = 10.0 * libm::log10(d_power / e_power);
    Ok(if db > NR_CAP_DB {
        NoiseReduction {
            db: NR_CAP_DB,
            capped: true,
        }
    } else {
        NoiseReduction { db, capped: false }
    })
}

/// One step of the exponentially weighted power estimate.
#[inline]
pub fn running_power(previous: f64, sample: f64, forgetting: f64) -> f64 {
    forgetting * previous + (1.0 - forgetting) * sample * sample
}

/// Exponentially weighted estimate of `E{y^2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTracker {
    forgetting: f64,
    power: f64,
}

impl PowerTracker {
    pub fn new(forgetting: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&forgetting) {
            return Err(Error::Config(format!("forgetting factor {forgetting} outside [0, 1)")));
        }
        Ok(Self { forgetting, power: 0.0 })
    }

    pub fn update(&mut self, sample: f64) -> f64 {
        self.power = running_power(self.power, sample, self.forgetting);
        self.power
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn forgetting(&self) -> f64 {
        self.forgetting
    }

    pub fn reset(&mut self) {
        self.power = 0.0;
    }
}

/// Fraction of samples with `|y| > rho`.
pub fn constraint_violation_ratio(y: &[f64], rho: f64) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::InsufficientData("empty output series".into()));
    }
    let over = y.iter().filter(|v| v.abs() > rho).count();
    Ok(over as f64 / y.len() as f64)
}

/// First index after which the windowed error power stays within `threshold_db`
/// of the final window's power for the rest of the run.
///
/// Window `i` covers `e[i..i + window]`. The settled stretch must span at least
/// two windows, so a series still drifting at the end reports `None`.
pub fn convergence_index(e: &[f64], window: usize, threshold_db: f64) -> Result<Option<usize>> {
    if window == 0 {
        return Err(Error::InsufficientData("window must be >= 1".into()));
    }
    if window >= e.len() {
        return Err(Error::InsufficientData(format!(
            "window {window} not shorter than series length {}",
            e.len()
        )));
    }
    let mut prefix = Vec::with_capacity(e.len() + 1);
    prefix.push(0.0);
    for v in e {
        let last = *prefix.last().unwrap();
        prefix.push(last + v * v);
    }
    let power = |i: usize| (prefix[i + window] - prefix[i]) / window as f64;
    let last = e.len() - window;
    let reference = power(last);
    let within = |p: f64| {
        if reference == 0.0 || p == 0.0 {
            return p == reference;
        }
        (10.0 * libm::log10(p / reference)).abs() <= threshold_db
    };
    let mut first = None;
    for i in (0..=last).rev() {
        if within(power(i)) {
            first = Some(i);
        } else {
            break;
        }
    }
    Ok(first.filter(|&i| i + window <= last))
}

/// Steady-state and convergence settings for run summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSettings {
    /// Trailing fraction of the run treated as steady state.
    pub steady_fraction: f64,
    /// Convergence window in samples; `None` uses 2% of the run.
    pub convergence_window: Option<usize>,
    pub convergence_threshold_db: f64,
}

impl Default for MetricsSettings {
    fn default() -> Self {
        Self {
            steady_fraction: 0.1,
            convergence_window: None,
            convergence_threshold_db: 2.0,
        }
    }
}

impl MetricsSettings {
    pub fn steady_len(&self, n: usize) -> usize {
        let k = libm::ceil(self.steady_fraction * n as f64) as usize;
        k.clamp(1.min(n), n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub samples: usize,
    /// Noise reduction over the steady-state window; `None` when the disturbance is silent.
    pub nr_db: Option<f64>,
    pub nr_capped: bool,
    pub steady_state_disturbance_power: f64,
    pub steady_state_residual_power: f64,
    /// Mean of `y^2` (raw control output) over the steady-state window.
    pub steady_state_output_power: f64,
    /// Fraction of steady-state samples with `|y| > rho`.
    pub violation_ratio: f64,
    pub convergence_index: Option<usize>,
    pub diverged: bool,
}

/// Per-sample series of a closed-loop run. All series share one length.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsLog {
    pub x: Vec<f64>,
    pub d: Vec<f64>,
    pub y: Vec<f64>,
    pub y_out: Vec<f64>,
    pub e: Vec<f64>,
    pub mode: Vec<ModeFlag>,
    pub gamma: Vec<f64>,
    pub y_power: Vec<f64>,
    pub diverged: bool,
}

/// One logged sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub x: f64,
    pub d: f64,
    pub y: f64,
    pub y_out: f64,
    pub e: f64,
    pub mode: ModeFlag,
    pub gamma: f64,
    pub y_power: f64,
}

impl MetricsLog {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            x: Vec::with_capacity(n),
            d: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            y_out: Vec::with_capacity(n),
            e: Vec::with_capacity(n),
            mode: Vec::with_capacity(n),
            gamma: Vec::with_capacity(n),
            y_power: Vec::with_capacity(n),
            diverged: false,
        }
    }

    pub fn push(&mut self, r: LogRow) {
        self.x.push(r.x);
        self.d.push(r.d);
        self.y.push(r.y);
        self.y_out.push(r.y_out);
        self.e.push(r.e);
        self.mode.push(r.mode);
        self.gamma.push(r.gamma);
        self.y_power.push(r.y_power);
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn row(&self, i: usize) -> LogRow {
        LogRow {
            x: self.x[i],
            d: self.d[i],
            y: self.y[i],
            y_out: self.y_out[i],
            e: self.e[i],
            mode: self.mode[i],
            gamma: self.gamma[i],
            y_power: self.y_power[i],
        }
    }

    pub fn is_consistent(&self) -> bool {
        let n = self.x.len();
        [
            self.d.len(),
            self.y.len(),
            self.y_out.len(),
            self.e.len(),
            self.mode.len(),
            self.gamma.len(),
            self.y_power.len(),
        ]
        .iter()
        .all(|&l| l == n)
    }

    /// Recompute the run summary from the series.
    pub fn summarize(&self, settings: &MetricsSettings, rho: f64) -> RunSummary {
        let n = self.len();
        let k = settings.steady_len(n);
        let tail = |v: &[f64]| -> f64 {
            if k == 0 {
                0.0
            } else {
                v[n - k..].iter().map(|s| s * s).sum::<f64>() / k as f64
            }
        };
        let d_power = tail(&self.d);
        let e_power = tail(&self.e);
        let nr = noise_reduction_db(d_power, e_power).ok();
        let violation_ratio = if k == 0 {
            0.0
        } else {
            constraint_violation_ratio(&self.y[n - k..], rho).unwrap_or(0.0)
        };
        let window = settings.convergence_window.unwrap_or_else(|| (n / 50).max(1));
        let convergence = convergence_index(&self.e, window, settings.convergence_threshold_db)
            .ok()
            .flatten();
        RunSummary {
            samples: n,
            nr_db: nr.map(|r| r.db),
            nr_capped: nr.is_some_and(|r| r.capped),
            steady_state_disturbance_power: d_power,
            steady_state_residual_power: e_power,
            steady_state_output_power: tail(&self.y),
            violation_ratio,
            convergence_index: convergence,
            diverged: self.diverged,
        }
    }
}
