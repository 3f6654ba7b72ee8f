use anc_core::controller::{Algorithm, ControllerConfig};
use anc_core::estimation::{frame_power_gain, inverse_model, predict_control, InverseModelSpec};
use anc_core::signal::{FirFilter, NoiseSource, SaturationModel};
use anc_core::sim::{run_simulation, Scenario};
use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};

fn fir(t: &[f64]) -> FirFilter {
    FirFilter::new(t.to_vec()).unwrap()
}

/// When `d` itself is white the frame ratio measures `1 / ||c||^2`, not the
/// path energy: it only recovers `sum s^2` when `d` is `s` applied to a white signal.
#[test]
fn frame_gain_of_a_white_disturbance_is_the_inverse_energy() {
    let s = fir(&[1.0, 0.5]);
    let model = inverse_model(&s, &InverseModelSpec::for_path(&s, 32)).unwrap();
    let c_energy: f64 = model.filter.taps().iter().map(|t| t * t).sum();
    assert_relative_eq!(c_energy, 4.0 / 3.0, max_relative = 1e-3);

    let d = NoiseSource::WhiteGaussian { sigma: 1.0, seed: 3 }
        .generate(1.0, 100_000)
        .unwrap();
    let yd = predict_control(&model.filter, &d).unwrap();
    let g = frame_power_gain(&d, &yd).unwrap();
    assert_relative_eq!(g, 1.0 / c_energy, max_relative = 0.02);
    assert!((g - 1.25).abs() > 0.4);
}

/// Colored reference: the converged filter matches the Wiener solution computed
/// from the exact correlations of the shaped noise.
#[test]
fn fxlms_reaches_the_wiener_filter_for_a_colored_reference() {
    let shaping = [1.0, 0.6];
    let s = [0.0, 0.8, 0.3];
    let primary = [0.0, 0.0, 0.7, 0.5, -0.3, 0.1];
    let taps = 6;
    let mut scenario = Scenario::uncontrolled(
        1.0,
        150_000,
        NoiseSource::BandLimited {
            seed: 9,
            shaping: fir(&shaping),
            sigma: 1.0,
        },
        fir(&primary),
        fir(&s),
    );
    scenario.saturation = SaturationModel::None;
    let mut cfg = ControllerConfig::new(Algorithm::Fxlms, taps, fir(&s));
    cfg.mu = 0.004;
    scenario.controller = cfg;
    let out = run_simulation(&scenario).unwrap();
    assert!(out.divergence.is_none());

    // x' = (s * shaping) * white, d = (primary * shaping) * white.
    let conv = |a: &[f64], b: &[f64]| {
        let mut o = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                o[i + j] += x * y;
            }
        }
        o
    };
    let xc = |a: &[f64], b: &[f64], k: usize| -> f64 {
        (k..a.len()).filter(|j| j - k < b.len()).map(|j| a[j] * b[j - k]).sum()
    };
    let fs = conv(&s, &shaping);
    let fp = conv(&primary, &shaping);
    let r = DMatrix::from_fn(taps, taps, |i, j| xc(&fs, &fs, i.abs_diff(j)));
    let p = DVector::from_fn(taps, |k, _| xc(&fp, &fs, k));
    let w_o = r.lu().solve(&p).unwrap();
    let w = DVector::from_column_slice(&out.final_weights);
    assert!((w - &w_o).norm() / w_o.norm() < 0.05);
}
