use alloc::format;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{config, contract, Error, Result};
use crate::linalg::Matrix;
use crate::signal::FirFilter;

/// Minimum number of integration intervals accepted by [`band_power_gain`].
pub const MIN_BAND_GRID: usize = 512;

/// A leak term: scalar (white reference) or full matrix (colored reference).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Leak {
    Scalar(f64),
    Matrix(Matrix),
}

impl Leak {
    pub fn is_zero(&self) -> bool {
        match self {
            Leak::Scalar(g) => *g == 0.0,
            Leak::Matrix(m) => m.rows().flatten().all(|&v| v == 0.0),
        }
    }

    pub fn scaled(&self, k: f64) -> Leak {
        match self {
            Leak::Scalar(g) => Leak::Scalar(g * k),
            Leak::Matrix(m) => Leak::Matrix(m.scaled(k)),
        }
    }
}

/// `|S(e^{jw})|^2` of a real FIR response.
pub fn magnitude_squared(s: &FirFilter, omega: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (l, &t) in s.taps().iter().enumerate() {
        let phase = omega * l as f64;
        re += t * libm::cos(phase);
        im -= t * libm::sin(phase);
    }
    re * re + im * im
}

/// Power gain of `s` over the two-sided band `±[omega1, omega2]`:
/// `(1/pi) * integral_{omega1}^{omega2} |S(e^{jw})|^2 dw`, by composite Simpson
/// over at least `grid` intervals. Over `[0, pi]` this is the tap energy.
pub fn band_power_gain(s: &FirFilter, omega1: f64, omega2: f64, grid: usize) -> Result<f64> {
    if !(0.0 <= omega1 && omega1 < omega2 && omega2 <= PI) {
        return Err(config(format!(
            "band [{omega1}, {omega2}] must satisfy 0 <= omega1 < omega2 <= pi"
        )));
    }
    if grid < MIN_BAND_GRID {
        return Err(config(format!("integration grid {grid} below minimum {MIN_BAND_GRID}")));
    }
    let n = grid + grid % 2;
    let h = (omega2 - omega1) / n as f64;
    let mut acc = magnitude_squared(s, omega1) + magnitude_squared(s, omega2);
    for i in 1..n {
        let w = omega1 + h * i as f64;
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * magnitude_squared(s, w);
    }
    Ok(acc * h / 3.0 / PI)
}

/// Frame estimate of the secondary-path power gain: `sum d^2 / sum yd^2`.
pub fn frame_power_gain(d_frame: &[f64], yd_frame: &[f64]) -> Result<f64> {
    if d_frame.len() != yd_frame.len() {
        return Err(contract(format!(
            "frame lengths differ: {} vs {}",
            d_frame.len(),
            yd_frame.len()
        )));
    }
    if d_frame.is_empty() {
        return Err(contract("empty frame"));
    }
    let ed: f64 = d_frame.iter().map(|v| v * v).sum();
    let ey: f64 = yd_frame.iter().map(|v| v * v).sum();
    if ey == 0.0 {
        return Err(Error::DegenerateFrame);
    }
    Ok(ed / ey)
}

/// Degree of nonlinearity `eta = sqrt(max(sigma_d^2 / (G_s rho^2), 1))`.
pub fn degree_of_nonlinearity(sigma_d2: f64, g_s: f64, rho2: f64) -> Result<f64> {
    if !(g_s > 0.0) {
        return Err(config(format!("power gain must be > 0, got {g_s}")));
    }
    if !(rho2 > 0.0) {
        return Err(config(format!("rho^2 must be > 0, got {rho2}")));
    }
    if !(sigma_d2 >= 0.0) {
        return Err(config(format!("disturbance power must be >= 0, got {sigma_d2}")));
    }
    Ok(libm::sqrt((sigma_d2 / (g_s * rho2)).max(1.0)))
}

fn check_eta(eta: f64) -> Result<()> {
    if eta >= 1.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(contract(format!("degree of nonlinearity must be >= 1, got {eta}")))
    }
}

/// Optimal Lagrangian factor `lambda_o = (sum s_l^2)(eta - 1)`.
pub fn optimal_lambda(s: &FirFilter, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(s.energy() * (eta - 1.0))
}

/// Optimal Lagrangian factor from measured moments:
/// `(sigma_yo^2 E_s / rho^2)(sqrt(sigma_d^2 / (E_s sigma_yo^2)) - 1)`, floored at zero,
/// where `E_s` is the tap energy of `s`.
pub fn lambda_from_moments(sigma_yo2: f64, sigma_d2: f64, s: &FirFilter, rho2: f64) -> Result<f64> {
    let es = s.energy();
    for (name, v) in [
        ("sigma_yo^2", sigma_yo2),
        ("sigma_d^2", sigma_d2),
        ("rho^2", rho2),
        ("sum s^2", es),
    ] {
        if !(v > 0.0) {
            return Err(config(format!("{name} must be > 0, got {v}")));
        }
    }
    let lambda = (sigma_yo2 * es / rho2) * (libm::sqrt(sigma_d2 / (es * sigma_yo2)) - 1.0);
    Ok(lambda.max(0.0))
}

/// Optimal leak `gamma_o = G_s (eta - 1) R_x`; `r_x` is either the reference power
/// (scalar) or its autocorrelation matrix, and the result has the same shape.
pub fn optimal_gamma(g_s: f64, eta: f64, r_x: &Leak) -> Result<Leak> {
    check_eta(eta)?;
    if !(g_s >= 0.0) {
        return Err(config(format!("power gain must be >= 0, got {g_s}")));
    }
    if let Leak::Scalar(p) = r_x {
        if !(*p >= 0.0) {
            return Err(config(format!("reference power must be >= 0, got {p}")));
        }
    }
    Ok(r_x.scaled(g_s * (eta - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    /// Closed-form band integral: |S|^2 = r0 + 2 sum_k r_k cos(k w).
    fn analytic_band_gain(taps: &[f64], w1: f64, w2: f64) -> f64 {
        let r: Vec<f64> = (0..taps.len())
            .map(|k| (0..taps.len() - k).map(|i| taps[i] * taps[i + k]).sum())
            .collect();
        let mut integral = r[0] * (w2 - w1);
        for (k, rk) in r.iter().enumerate().skip(1) {
            let k = k as f64;
            integral += 2.0 * rk * ((k * w2).sin() - (k * w1).sin()) / k;
        }
        integral / PI
    }

    fn fir(t: &[f64]) -> FirFilter {
        FirFilter::new(t.to_vec()).unwrap()
    }

    #[test]
    fn band_gain_examples() {
        let g = band_power_gain(&fir(&[1.0]), 0.0, PI, 512).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
        let g = band_power_gain(&fir(&[0.6, 0.8]), 0.0, PI, 512).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
        let g = band_power_gain(&fir(&[1.0, 1.0]), 0.0, PI / 2.0, 512).unwrap();
        let oracle = analytic_band_gain(&[1.0, 1.0], 0.0, PI / 2.0);
        assert!((oracle - (1.0 + 2.0 / PI)).abs() < 1e-12);
        assert!((g - oracle).abs() < 1e-9, "{g} vs {oracle}");
    }

    #[test]
    fn band_gain_rejects_bad_band() {
        let s = fir(&[1.0]);
        assert!(band_power_gain(&s, 1.0, 0.5, 512).is_err());
        assert!(band_power_gain(&s, -0.1, 1.0, 512).is_err());
        assert!(band_power_gain(&s, 0.0, 4.0, 512).is_err());
        assert!(band_power_gain(&s, 0.0, 1.0, 100).is_err());
    }

    #[test]
    fn frame_gain_examples() {
        assert_eq!(frame_power_gain(&[2.0, 2.0], &[1.0, 1.0]).unwrap(), 4.0);
        assert_eq!(frame_power_gain(&[0.3, -1.0, 2.0], &[0.3, -1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(frame_power_gain(&[1.0, 1.0], &[0.0, 0.0]), Err(Error::DegenerateFrame));
        assert!(frame_power_gain(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn eta_examples() {
        assert_eq!(degree_of_nonlinearity(0.5, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(degree_of_nonlinearity(4.0, 1.0, 1.0).unwrap(), 2.0);
        assert!((degree_of_nonlinearity(9.0, 4.0, 0.25).unwrap() - 3.0).abs() < 1e-15);
        assert!(degree_of_nonlinearity(1.0, 0.0, 1.0).is_err());
        assert!(degree_of_nonlinearity(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(optimal_lambda(&fir(&[0.3, -2.0]), 1.0).unwrap(), 0.0);
        assert_eq!(optimal_lambda(&fir(&[1.0]), 2.0).unwrap(), 1.0);
        assert!((optimal_lambda(&fir(&[0.6, 0.8]), 3.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(optimal_lambda(&fir(&[1.0]), 0.5).is_err());
    }

    #[test]
    fn lambda_from_moments_examples() {
        let s = fir(&[0.6, 0.8]);
        // sigma_yo^2 = sigma_d^2 / sum s^2 puts the square root at 1.
        assert!(lambda_from_moments(2.0, 2.0 * s.energy(), &s, 0.7).unwrap().abs() < 1e-15);
        assert_eq!(lambda_from_moments(1.0, 4.0, &fir(&[1.0]), 1.0).unwrap(), 1.0);
        assert!(lambda_from_moments(0.0, 4.0, &fir(&[1.0]), 1.0).is_err());
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(optimal_gamma(3.0, 1.0, &Leak::Scalar(0.7)).unwrap(), Leak::Scalar(0.0));
        assert_eq!(optimal_gamma(2.0, 2.0, &Leak::Scalar(0.5)).unwrap(), Leak::Scalar(1.0));
        let g_s = frame_power_gain(&[2.0, 2.0], &[1.0, 1.0]).unwrap();
        let r = Leak::Matrix(Matrix::identity(3).scaled(0.25));
        assert_eq!(optimal_gamma(g_s, 2.0, &r).unwrap(), Leak::Matrix(Matrix::identity(3)));
        let zero = optimal_gamma(2.0, 1.0, &r).unwrap();
        assert!(zero.is_zero());
        assert!(optimal_gamma(2.0, 0.9, &r).is_err());
    }

    proptest! {
        #[test]
        fn parseval_full_band(taps in prop::collection::vec(-1.0f64..1.0, 1..=64)) {
            let s = FirFilter::new(taps).unwrap();
            let g = band_power_gain(&s, 0.0, PI, 4096).unwrap();
            let e = s.energy();
            prop_assert!((g - e).abs() <= 1e-9 * e.max(1e-300));
        }

        #[test]
        fn partial_band_matches_closed_form(
            taps in prop::collection::vec(-1.0f64..1.0, 1..=8),
            a in 0.0f64..3.0,
            width in 0.05f64..3.0,
        ) {
            let b = (a + width).min(PI);
            prop_assume!(b > a);
            let s = FirFilter::new(taps.clone()).unwrap();
            let g = band_power_gain(&s, a, b, 16384).unwrap();
            let oracle = analytic_band_gain(&taps, a, b);
            prop_assert!((g - oracle).abs() <= 1e-9 * (1.0 + s.energy()));
        }

        #[test]
        fn consistency_chain(
            taps in prop::collection::vec(-1.0f64..1.0, 1..8),
            sigma_d2 in 0.01f64..100.0,
            rho2 in 0.01f64..10.0,
        ) {
            let s = FirFilter::new(taps).unwrap();
            prop_assume!(s.energy() > 1e-6);
            let eta = degree_of_nonlinearity(sigma_d2, s.energy(), rho2).unwrap();
            let direct = optimal_lambda(&s, eta).unwrap();
            let moments = lambda_from_moments(rho2, sigma_d2, &s, rho2).unwrap();
            prop_assert!((direct - moments).abs() <= 1e-12 * direct.abs().max(1e-300) + 1e-15);
        }

        #[test]
        fn monotone_in_disturbance_power(
            lo in 0.0f64..50.0,
            extra in 0.0f64..50.0,
            g_s in 0.1f64..4.0,
            rho2 in 0.1f64..4.0,
        ) {
            let s = fir(&[g_s.sqrt()]);
            let e1 = degree_of_nonlinearity(lo, g_s, rho2).unwrap();
            let e2 = degree_of_nonlinearity(lo + extra, g_s, rho2).unwrap();
            prop_assert!(e2 >= e1);
            prop_assert!(optimal_lambda(&s, e2).unwrap() >= optimal_lambda(&s, e1).unwrap());
            let g1 = optimal_gamma(g_s, e1, &Leak::Scalar(1.0)).unwrap();
            let g2 = optimal_gamma(g_s, e2, &Leak::Scalar(1.0)).unwrap();
            match (g1, g2) {
                (Leak::Scalar(a), Leak::Scalar(b)) => prop_assert!(b >= a),
                _ => unreachable!(),
            }
        }
    }
}
