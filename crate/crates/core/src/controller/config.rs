use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::estimation::Leak;
use crate::signal::FirFilter;

/// Identifier of the controller update rules, recorded in run reports.
pub const ALGORITHM_ID: &str = "anc-core-controllers/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// No control: output stays at zero.
    None,
    Fxlms,
    /// FxLMS update with a hard clip on the output; the update ignores the clip.
    ClippingFxlms,
    /// Leaky FxLMS with a fixed leak.
    Leaky,
    /// Leaky FxLMS with a leak chosen offline from measured statistics.
    Olfxlms,
    /// Leaky FxLMS whose leak is re-estimated every frame through the inverse model.
    OlfxlmsOnline,
    /// Two-gradient FxLMS.
    TwoGrad,
    /// Two-gradient FxLMS with a momentum (heavy-ball) term.
    TwoGradMomentum,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::None => "none",
            Algorithm::Fxlms => "fxlms",
            Algorithm::ClippingFxlms => "clipping-fxlms",
            Algorithm::Leaky => "leaky",
            Algorithm::Olfxlms => "olfxlms",
            Algorithm::OlfxlmsOnline => "olfxlms-online",
            Algorithm::TwoGrad => "two-grad",
            Algorithm::TwoGradMomentum => "two-grad-momentum",
        }
    }

    /// Algorithms that clip their own output at `rho`.
    pub fn clips_output(self) -> bool {
        matches!(
            self,
            Algorithm::ClippingFxlms | Algorithm::TwoGrad | Algorithm::TwoGradMomentum
        )
    }

    /// Algorithms whose update depends on `rho`.
    pub fn needs_rho(self) -> bool {
        matches!(
            self,
            Algorithm::ClippingFxlms | Algorithm::TwoGrad | Algorithm::TwoGradMomentum | Algorithm::OlfxlmsOnline
        )
    }

    pub fn is_two_grad(self) -> bool {
        matches!(self, Algorithm::TwoGrad | Algorithm::TwoGradMomentum)
    }

    pub fn is_leaky(self) -> bool {
        matches!(self, Algorithm::Leaky | Algorithm::Olfxlms | Algorithm::OlfxlmsOnline)
    }
}

/// Branch test used by the two-gradient controllers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintMode {
    /// `|y(n)| <= rho` selects the error branch; raw (unnormalized) updates.
    #[default]
    InstantaneousAmplitude,
    /// Tracked `E{y^2} <= rho^2` selects the error branch; each update is a
    /// normalized gradient step of length `mu/2`.
    AveragePower,
}

/// Shape of the leak estimated online.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeakShape {
    #[default]
    Scalar,
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub algorithm: Algorithm,
    /// Control filter length `L`.
    pub length: usize,
    /// Secondary-path estimate used to form the filtered reference.
    pub secondary_estimate: FirFilter,
    /// FxLMS / leaky step size.
    pub mu: f64,
    /// Error-branch step size of the two-gradient controllers.
    pub mu1: f64,
    /// Constraint-branch step size of the two-gradient controllers.
    pub mu2: f64,
    /// Leak term (initial value for the online variant).
    pub gamma: Leak,
    /// Amplitude constraint; `rho^2` is the output power budget.
    pub rho: f64,
    pub constraint_mode: ConstraintMode,
    /// Forgetting factor of the output power tracker.
    pub forgetting: f64,
    pub momentum: f64,
    /// Frame length `K` of the online leak estimate.
    pub frame_len: usize,
    pub leak_shape: LeakShape,
    /// Trained inverse model of the secondary path (online leak only).
    pub inverse_model: Option<FirFilter>,
}

impl ControllerConfig {
    /// Defaults for `algorithm` with an `L`-tap filter and the given path estimate.
    pub fn new(algorithm: Algorithm, length: usize, secondary_estimate: FirFilter) -> Self {
        Self {
            algorithm,
            length,
            secondary_estimate,
            mu: 0.01,
            mu1: 0.01,
            mu2: 0.01,
            gamma: Leak::Scalar(0.0),
            rho: f64::INFINITY,
            constraint_mode: ConstraintMode::default(),
            forgetting: 0.999,
            momentum: 0.0,
            frame_len: 1024,
            leak_shape: LeakShape::default(),
            inverse_model: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(config("controller length must be >= 1"));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let alg = self.algorithm;
        if matches!(alg, Algorithm::Fxlms | Algorithm::ClippingFxlms) || alg.is_leaky() {
            positive("mu", self.mu)?;
        }
        if alg.is_two_grad() {
            positive("mu1", self.mu1)?;
            positive("mu2", self.mu2)?;
        }
        if alg.needs_rho() && !(self.rho > 0.0) {
            return Err(config(format!("rho must be > 0 for {}, got {}", alg.name(), self.rho)));
        }
        if !(0.0..1.0).contains(&self.forgetting) {
            return Err(config(format!("forgetting factor {} outside [0, 1)", self.forgetting)));
        }
        if alg == Algorithm::TwoGradMomentum && !(0.0..1.0).contains(&self.momentum) {
            return Err(config(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        match &self.gamma {
            Leak::Scalar(g) => {
                if !(*g >= 0.0 && g.is_finite()) {
                    return Err(config(format!("leak gamma must be >= 0, got {g}")));
                }
            }
            Leak::Matrix(m) => {
                if m.dim() != self.length {
                    return Err(config(format!(
                        "leak matrix is {0}x{0}, controller length is {1}",
                        m.dim(),
                        self.length
                    )));
                }
                if !m.is_finite() || m.max_asymmetry() > 1e-8 * (1.0 + m.trace().abs()) {
                    return Err(config("leak matrix must be finite and symmetric"));
                }
            }
        }
        if alg == Algorithm::OlfxlmsOnline {
            if self.frame_len == 0 {
                return Err(config("frame_len must be >= 1"));
            }
            if self.inverse_model.is_none() {
                return Err(config("olfxlms-online needs a trained inverse model"));
            }
        }
        Ok(())
    }

    /// Non-fatal configuration issues.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.algorithm.is_leaky() {
            if let Leak::Scalar(g) = self.gamma {
                if self.mu * g >= 1.0 {
                    out.push(format!(
                        "mu * gamma = {} >= 1: the leak flips the weight sign each step",
                        self.mu * g
                    ));
                }
            }
        }
        out
    }
}
