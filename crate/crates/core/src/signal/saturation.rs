use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Output nonlinearity of the amplifier/actuator stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SaturationModel {
    /// Clamp to `[-rho, rho]`.
    HardClip { rho: f64 },
    /// `rho * tanh(y / rho)`.
    ScaledTanh { rho: f64 },
    #[default]
    None,
}

impl SaturationModel {
    pub fn hard_clip(rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self::HardClip { rho })
    }

    pub fn scaled_tanh(rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self::ScaledTanh { rho })
    }

    pub fn threshold(&self) -> Option<f64> {
        match *self {
            Self::HardClip { rho } | Self::ScaledTanh { rho } => Some(rho),
            Self::None => None,
        }
    }

    pub fn apply(&self, y: f64) -> f64 {
        match *self {
            Self::HardClip { rho } => clip(y, rho),
            Self::ScaledTanh { rho } => {
                if rho.is_infinite() {
                    y
                } else {
                    rho * libm::tanh(y / rho)
                }
            }
            Self::None => y,
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 {
        Ok(())
    } else {
        Err(config("saturation threshold rho must be > 0"))
    }
}

/// Hard clip of `y` to `[-rho, rho]`; identity when `|y| <= rho`.
#[inline]
pub fn clip(y: f64, rho: f64) -> f64 {
    if y > rho {
        rho
    } else if y < -rho {
        -rho
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hard_clip_cases() {
        let m = SaturationModel::hard_clip(1.0).unwrap();
        assert_eq!(m.apply(1.5), 1.0);
        assert_eq!(m.apply(0.5), 0.5);
        assert_eq!(m.apply(-2.0), -1.0);
        assert_eq!(m.apply(1.0), 1.0);
    }

    #[test]
    fn infinite_threshold_is_identity() {
        let m = SaturationModel::HardClip { rho: f64::INFINITY };
        assert_eq!(m.apply(123.0), 123.0);
        let t = SaturationModel::ScaledTanh { rho: f64::INFINITY };
        assert_eq!(t.apply(-4.0), -4.0);
    }

    #[test]
    fn bad_threshold_rejected() {
        assert!(SaturationModel::hard_clip(0.0).is_err());
        assert!(SaturationModel::scaled_tanh(-1.0).is_err());
    }

    #[test]
    fn none_is_identity() {
        assert_eq!(SaturationModel::None.apply(-7.25), -7.25);
    }

    proptest! {
        #[test]
        fn hard_clip_bound_and_idempotence(y in -1e6f64..1e6, rho in 1e-3f64..1e3) {
            let m = SaturationModel::hard_clip(rho).unwrap();
            let once = m.apply(y);
            prop_assert!(once.abs() <= rho);
            prop_assert_eq!(m.apply(once), once);
            if y.abs() <= rho {
                prop_assert_eq!(once, y);
            }
        }

        #[test]
        fn tanh_inside_and_monotone(a in -50.0f64..50.0, b in -50.0f64..50.0, rho in 0.1f64..10.0) {
            let m = SaturationModel::scaled_tanh(rho).unwrap();
            let (fa, fb) = (m.apply(a), m.apply(b));
            prop_assert!(fa.abs() <= rho);
            if a < b {
                prop_assert!(fa <= fb);
            }
        }
    }
}
