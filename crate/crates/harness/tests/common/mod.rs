//! Scenarios and independent oracles shared by the integration tests.
#![allow(dead_code)]

use anc_sim::{parse_scenario, Format, ScenarioConfig};
use nalgebra::{DMatrix, DVector};

/// Secondary path of the white-noise scenario: one sample of delay, gain 0.9.
pub const WHITE_SECONDARY: [f64; 2] = [0.0, 0.9];

/// Control filter the white-noise scenario would need without a constraint.
pub fn white_target() -> Vec<f64> {
    (0..8).map(|k| 0.8f64.powi(k) * (0.7 * k as f64).cos()).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Threshold at half the unconstrained output amplitude: the required output
/// power is four times the budget, so the degree of nonlinearity is 2.
pub fn white_rho() -> f64 {
    norm(&white_target()) / 2.0
}

/// White unit-variance reference, 16-tap controller, hard-clip plant at `rho`
/// unless `saturation` overrides it. `controller` may set its own `rho`.
pub fn white_eta2(num_samples: usize, seed: u64, controller: &str, saturation: &str) -> ScenarioConfig {
    let primary = conv(&WHITE_SECONDARY, &white_target());
    let rho = if controller.contains("rho =") {
        String::new()
    } else {
        format!("rho = {:?}\n", white_rho())
    };
    let text = format!(
        "num_samples = {num_samples}\nseed = {seed}\n\n[noise]\nkind = \"white\"\n\n[paths]\nprimary = {primary:?}\nsecondary = {WHITE_SECONDARY:?}\n\n[saturation]\n{saturation}\n\n[controller]\nlength = 16\n{rho}{controller}\n"
    );
    parse(&text)
}

pub const TONAL_SECONDARY: [f64; 3] = [0.5, 0.0, 0.5];
pub const TONAL_RHO: f64 = 0.5;

/// Unit sine at 0.45 pi rad/sample through `[0.5, 0, 0.5]`; cancelling it takes
/// an output of amplitude 1, twice the threshold of 0.5.
pub fn tonal_eta2(num_samples: usize, controller: &str) -> ScenarioConfig {
    let primary = conv(&TONAL_SECONDARY, &[0.0, 0.0, 1.0]);
    let text = format!(
        "sample_rate = 8000.0\nnum_samples = {num_samples}\n\n[noise]\nkind = \"sine\"\nfrequency = 1800.0\n\n[paths]\nprimary = {primary:?}\nsecondary = {TONAL_SECONDARY:?}\n\n[controller]\nlength = 16\nrho = {TONAL_RHO:?}\n{controller}\n"
    );
    parse(&text)
}

pub fn parse(text: &str) -> ScenarioConfig {
    parse_scenario(text, Format::Toml).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

/// `E[(a * x)(n) (b * x)(n - k)]` for unit-variance white `x`.
pub fn white_xcorr(a: &[f64], b: &[f64], k: usize) -> f64 {
    (k..a.len()).filter(|j| j - k < b.len()).map(|j| a[j] * b[j - k]).sum()
}

/// Autocorrelation matrix of the filtered reference `s * x` for white `x`.
pub fn filtered_autocorrelation(s: &[f64], taps: usize) -> DMatrix<f64> {
    DMatrix::from_fn(taps, taps, |i, j| white_xcorr(s, s, i.abs_diff(j)))
}

/// Cross-correlation of the disturbance `p * x` with the filtered reference.
pub fn disturbance_cross(p: &[f64], s: &[f64], taps: usize) -> DVector<f64> {
    DVector::from_fn(taps, |k, _| white_xcorr(p, s, k))
}

/// `(diag * I + r)^-1 p` by a dense LU solve.
pub fn regularized_solve(r: &DMatrix<f64>, p: &DVector<f64>, diag: f64) -> DVector<f64> {
    let n = r.nrows();
    (r + DMatrix::identity(n, n) * diag)
        .lu()
        .solve(p)
        .expect("regularized system is nonsingular")
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(b)
}
