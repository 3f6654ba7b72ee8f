use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::fir::{FirFilter, FirPath};
use crate::error::{config, Result};

/// Identifier of the sample generator, recorded in run reports.
///
/// Bump the suffix whenever the PRNG, the Gaussian transform, or the seeding
/// scheme changes, since logs are only reproducible under the same identifier.
pub const GENERATOR_ID: &str = "chacha8-u64seed/rand_distr-0.5-ziggurat/v1";

/// Description of a reference noise signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseSource {
    /// Zero-mean white Gaussian noise with standard deviation `sigma`.
    WhiteGaussian { sigma: f64, seed: u64 },
    /// `amplitude * sin(2 pi frequency n / fs + phase)`.
    Sine {
        frequency: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// White Gaussian noise of standard deviation `sigma` shaped by a FIR filter.
    BandLimited { seed: u64, shaping: FirFilter, sigma: f64 },
    /// Sample-wise sum of the component sources.
    Mixture { components: Vec<NoiseSource> },
}

impl NoiseSource {
    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(config("sample_rate must be positive and finite"));
        }
        match self {
            Self::WhiteGaussian { sigma, .. } | Self::BandLimited { sigma, .. } => {
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return Err(config(format!("noise sigma must be >= 0, got {sigma}")));
                }
            }
            Self::Sine {
                frequency,
                amplitude,
                phase,
            } => {
                if !(*frequency >= 0.0 && *frequency < sample_rate / 2.0) {
                    return Err(config(format!(
                        "sine frequency {frequency} Hz must lie in [0, fs/2 = {})",
                        sample_rate / 2.0
                    )));
                }
                if !amplitude.is_finite() || !phase.is_finite() {
                    return Err(config("sine amplitude and phase must be finite"));
                }
            }
            Self::Mixture { components } => {
                for c in components {
                    c.validate(sample_rate)?;
                }
            }
        }
        Ok(())
    }

    /// Build a streaming generator.
    pub fn generator(&self, sample_rate: f64) -> Result<NoiseGenerator> {
        self.validate(sample_rate)?;
        Ok(NoiseGenerator::build(self, sample_rate))
    }

    /// Generate the first `n` samples.
    pub fn generate(&self, sample_rate: f64, n: usize) -> Result<Vec<f64>> {
        let mut g = self.generator(sample_rate)?;
        Ok((0..n).map(|_| g.next_sample()).collect())
    }
}

/// Deterministic streaming sampler for a [`NoiseSource`].
#[derive(Debug, Clone)]
pub struct NoiseGenerator {
    inner: Gen,
}

#[derive(Debug, Clone)]
enum Gen {
    White {
        sigma: f64,
        rng: Box<ChaCha8Rng>,
    },
    Sine {
        omega: f64,
        amplitude: f64,
        phase: f64,
        n: u64,
    },
    Shaped {
        white: Box<Gen>,
        path: FirPath,
    },
    Mixture(Vec<Gen>),
}

impl NoiseGenerator {
    fn build(src: &NoiseSource, fs: f64) -> Self {
        Self {
            inner: Gen::build(src, fs),
        }
    }

    pub fn next_sample(&mut self) -> f64 {
        self.inner.next()
    }
}

impl Iterator for NoiseGenerator {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.inner.next())
    }
}

impl Gen {
    fn build(src: &NoiseSource, fs: f64) -> Self {
        match src {
            NoiseSource::WhiteGaussian { sigma, seed } => Gen::White {
                sigma: *sigma,
                rng: Box::new(ChaCha8Rng::seed_from_u64(*seed)),
            },
            NoiseSource::Sine {
                frequency,
                amplitude,
                phase,
            } => Gen::Sine {
                omega: 2.0 * PI * frequency / fs,
                amplitude: *amplitude,
                phase: *phase,
                n: 0,
            },
            NoiseSource::BandLimited { seed, shaping, sigma } => Gen::Shaped {
                white: Box::new(Gen::White {
                    sigma: *sigma,
                    rng: Box::new(ChaCha8Rng::seed_from_u64(*seed)),
                }),
                path: FirPath::new(shaping.clone()),
            },
            NoiseSource::Mixture { components } => Gen::Mixture(components.iter().map(|c| Gen::build(c, fs)).collect()),
        }
    }

    fn next(&mut self) -> f64 {
        match self {
            Gen::White { sigma, rng } => {
                let z: f64 = StandardNormal.sample(rng.as_mut());
                *sigma * z
            }
            Gen::Sine {
                omega,
                amplitude,
                phase,
                n,
            } => {
                // Phase from the integer index keeps long runs free of accumulated drift.
                let v = *amplitude * libm::sin(*omega * (*n as f64) + *phase);
                *n += 1;
                v
            }
            Gen::Shaped { white, path } => {
                let w = white.next();
                path.propagate(w).unwrap_or(0.0)
            }
            Gen::Mixture(parts) => parts.iter_mut().map(|g| g.next()).sum(),
        }
    }
}
