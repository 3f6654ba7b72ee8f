//! Closed-loop feedforward simulation.
//!
//! Per sample `n`: the reference `x(n)` drives the primary path to give the
//! disturbance `d(n)`; the controller turns `x(n)` into `y(n)` and its own
//! `y_out(n)`; the amplifier saturation and the secondary path turn that into
//! anti-noise `a(n)`; the error microphone measures `e(n) = d(n) - a(n)`, which
//! drives the controller update at `n + 1`.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::controller::{Algorithm, Controller, ControllerConfig};
use crate::error::{Error, Result};
use crate::metrics::{LogRow, MetricsLog};
use crate::signal::{FirFilter, FirPath, NoiseSource, SaturationModel};

/// Source of the disturbance samples fed to the online leak estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisturbanceFeed {
    /// The simulated disturbance itself.
    #[default]
    True,
    /// `e(n) + (s_hat * y_emitted)(n)`, one sample late.
    Reconstructed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub sample_rate: f64,
    pub num_samples: usize,
    pub noise: NoiseSource,
    pub primary_path: FirFilter,
    pub secondary_path: FirFilter,
    pub saturation: SaturationModel,
    pub controller: ControllerConfig,
    #[serde(default)]
    pub disturbance_feed: DisturbanceFeed,
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub log: MetricsLog,
    /// Set when the controller tripped the divergence guard; the log stops there.
    pub divergence: Option<Error>,
    pub final_weights: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Run `scenario` with a controller built from its configuration.
pub fn run_simulation(scenario: &Scenario) -> Result<SimulationOutcome> {
    let controller = Controller::new(scenario.controller.clone())?;
    run_with_controller(scenario, controller, |_, _| {})
}

/// Run `scenario` with a prepared controller, calling `observe` after every sample.
pub fn run_with_controller<F>(
    scenario: &Scenario,
    mut controller: Controller,
    mut observe: F,
) -> Result<SimulationOutcome>
where
    F: FnMut(usize, &Controller),
{
    let mut source = scenario.noise.generator(scenario.sample_rate)?;
    let mut primary = FirPath::new(scenario.primary_path.clone());
    let mut secondary = FirPath::new(scenario.secondary_path.clone());
    let online = controller.algorithm() == Algorithm::OlfxlmsOnline;
    let mut shat_emitted = FirPath::new(controller.config().secondary_estimate.clone());
    let mut log = MetricsLog::with_capacity(scenario.num_samples);
    let warnings = controller.config().warnings();

    let mut e_prev = 0.0;
    let mut d_hat_prev = 0.0;
    let mut divergence = None;
    for n in 0..scenario.num_samples {
        let x = source.next_sample();
        let d = primary.propagate(x)?;
        let stepped = if online {
            let d_est = match scenario.disturbance_feed {
                DisturbanceFeed::True => d,
                DisturbanceFeed::Reconstructed => d_hat_prev,
            };
            controller.step_with_disturbance(x, e_prev, d_est)
        } else {
            controller.step(x, e_prev)
        };
        let out = match stepped {
            Ok(out) => out,
            Err(err) => {
                divergence = Some(with_step(err, n as u64));
                log.diverged = true;
                break;
            }
        };
        let emitted = scenario.saturation.apply(out.y_out);
        let a = match secondary.propagate(emitted) {
            Ok(a) => a,
            Err(err) => {
                divergence = Some(with_step(err, n as u64));
                log.diverged = true;
                break;
            }
        };
        let e = d - a;
        d_hat_prev = e + shat_emitted.propagate(emitted)?;
        log.push(LogRow {
            x,
            d,
            y: out.y,
            y_out: emitted,
            e,
            mode: out.mode,
            gamma: controller.gamma_level(),
            y_power: controller.output_power(),
        });
        observe(n, &controller);
        e_prev = e;
    }
    Ok(SimulationOutcome {
        log,
        divergence,
        final_weights: controller.weights().to_vec(),
        warnings,
    })
}

fn with_step(err: Error, step: u64) -> Error {
    match err {
        Error::Divergence {
            reason, last_weights, ..
        } => Error::Divergence {
            step,
            reason,
            last_weights,
        },
        other => other,
    }
}

/// Uncontrolled signals `(x, d, x')` of a scenario, with `x'` formed through the
/// controller's secondary-path estimate.
pub fn open_loop_signals(scenario: &Scenario, samples: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let x = scenario.noise.generate(scenario.sample_rate, samples)?;
    let d = crate::signal::path_propagate(&scenario.primary_path, &x)?;
    let xp = crate::signal::path_propagate(&scenario.controller.secondary_estimate, &x)?;
    Ok((x, d, xp))
}

impl Scenario {
    /// Convenience constructor for a controller-free scenario over the given paths.
    pub fn uncontrolled(
        sample_rate: f64,
        num_samples: usize,
        noise: NoiseSource,
        primary_path: FirFilter,
        secondary_path: FirFilter,
    ) -> Self {
        let controller = ControllerConfig::new(Algorithm::None, 1, secondary_path.clone());
        Self {
            sample_rate,
            num_samples,
            noise,
            primary_path,
            secondary_path,
            saturation: SaturationModel::None,
            controller,
            disturbance_feed: DisturbanceFeed::True,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fir(t: &[f64]) -> FirFilter {
        FirFilter::new(t.to_vec()).unwrap()
    }

    #[test]
    fn silent_noise_gives_zero_series() {
        let mut s = Scenario::uncontrolled(
            8000.0,
            200,
            NoiseSource::WhiteGaussian { sigma: 0.0, seed: 1 },
            fir(&[0.0, 0.9, 0.2]),
            fir(&[0.0, 0.8]),
        );
        s.controller = ControllerConfig::new(Algorithm::Fxlms, 8, fir(&[0.0, 0.8]));
        let out = run_simulation(&s).unwrap();
        for series in [&out.log.x, &out.log.d, &out.log.y, &out.log.y_out, &out.log.e] {
            assert!(series.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn no_control_error_equals_disturbance() {
        let s = Scenario::uncontrolled(
            8000.0,
            500,
            NoiseSource::WhiteGaussian { sigma: 1.0, seed: 5 },
            fir(&[0.0, 0.9, 0.2]),
            fir(&[0.0, 0.8]),
        );
        let out = run_simulation(&s).unwrap();
        assert_eq!(out.log.e, out.log.d);
        assert!(out.divergence.is_none());
    }

    #[test]
    fn divergence_truncates_log() {
        let mut s = Scenario::uncontrolled(
            8000.0,
            5000,
            NoiseSource::WhiteGaussian { sigma: 1.0, seed: 5 },
            fir(&[0.0, 0.9]),
            fir(&[0.0, 0.9]),
        );
        s.controller = ControllerConfig {
            mu: 10.0,
            ..ControllerConfig::new(Algorithm::Fxlms, 8, fir(&[0.0, 0.9]))
        };
        let out = run_simulation(&s).unwrap();
        assert!(out.log.diverged);
        assert!(out.log.len() < 5000);
        assert!(out.log.is_consistent());
        match out.divergence {
            Some(Error::Divergence { step, .. }) => assert_eq!(step as usize, out.log.len()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn open_loop_shapes() {
        let s = Scenario::uncontrolled(
            1.0,
            10,
            NoiseSource::WhiteGaussian { sigma: 1.0, seed: 5 },
            fir(&[0.5]),
            fir(&[2.0]),
        );
        let (x, d, xp) = open_loop_signals(&s, 50).unwrap();
        assert_eq!(x.len(), 50);
        assert!(x.iter().zip(&d).all(|(a, b)| *b == 0.5 * a));
        assert!(x.iter().zip(&xp).all(|(a, b)| *b == 2.0 * a));
    }
}
