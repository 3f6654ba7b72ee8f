use alloc::format;
use alloc::vec::Vec;

use super::gain::Leak;
use crate::error::{contract, Result};
use crate::linalg::{solve, Matrix};
use crate::signal::{dot, FirFilter};

fn check_dims(r_xp: &Matrix, p_dxp: &[f64]) -> Result<()> {
    if r_xp.dim() != p_dxp.len() || p_dxp.is_empty() {
        return Err(contract(format!(
            "autocorrelation is {0}x{0} but cross-correlation has {1} entries",
            r_xp.dim(),
            p_dxp.len()
        )));
    }
    Ok(())
}

/// Output-constrained optimum `w_o = (lambda_o sigma_x^2 I + R_x')^{-1} P_dx'`.
pub fn wiener_constrained(r_xp: &Matrix, p_dxp: &[f64], lambda_o: f64, sigma_x2: f64) -> Result<FirFilter> {
    check_dims(r_xp, p_dxp)?;
    let w = solve(&r_xp.add_diagonal(lambda_o * sigma_x2), p_dxp)?;
    FirFilter::new(w)
}

/// Leaky-FxLMS optimum `w_o = (gamma I + R_x')^{-1} P_dx'`, or `(Gamma + R_x')^{-1} P_dx'`
/// for a matrix leak.
pub fn wiener_leaky(r_xp: &Matrix, p_dxp: &[f64], gamma: &Leak) -> Result<FirFilter> {
    check_dims(r_xp, p_dxp)?;
    let a = match gamma {
        Leak::Scalar(g) => r_xp.add_diagonal(*g),
        Leak::Matrix(m) => m.add(r_xp)?,
    };
    FirFilter::new(solve(&a, p_dxp)?)
}

/// Unconstrained optimum `(R_x')^{-1} P_dx'`.
pub fn wiener_unconstrained(r_xp: &Matrix, p_dxp: &[f64]) -> Result<FirFilter> {
    wiener_leaky(r_xp, p_dxp, &Leak::Scalar(0.0))
}

/// Residual error power `sigma_d^2 - 2 w^T P + w^T R_x' w` of a linear controller `w`.
pub fn residual_power(sigma_d2: f64, r_xp: &Matrix, p_dxp: &[f64], w: &FirFilter) -> f64 {
    let rw: Vec<f64> = r_xp.mul_vec(w.taps());
    sigma_d2 - 2.0 * dot(w.taps(), p_dxp) + dot(w.taps(), &rw)
}

/// Control-output power `w^T R_x w`.
pub fn output_power(r_x: &Matrix, w: &FirFilter) -> f64 {
    dot(w.taps(), &r_x.mul_vec(w.taps()))
}
