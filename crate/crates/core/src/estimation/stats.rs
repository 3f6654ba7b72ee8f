use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::gain::Leak;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Measured moments and the constraint parameters derived from them.
///
/// Fields are optional because snapshots are filled in stages: raw moments from
/// [`estimate_statistics`], then gain, eta, lambda and gamma during leak tuning.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatisticsSnapshot {
    pub sigma_d2: Option<f64>,
    pub sigma_x2: Option<f64>,
    pub sigma_yo2: Option<f64>,
    pub sigma_ypo2: Option<f64>,
    pub r_x: Option<Matrix>,
    pub r_xp: Option<Matrix>,
    pub p_dxp: Option<Vec<f64>>,
    /// Diagnostic only.
    pub r_y: Option<Matrix>,
    pub g_s: Option<f64>,
    pub eta: Option<f64>,
    pub lambda_o: Option<f64>,
    pub gamma_o: Option<Leak>,
}

/// Biased (1/N) lag correlations `r[k] = (1/N) sum_n a(n) b(n-k)` for `k < lags`.
pub fn cross_correlation(a: &[f64], b: &[f64], lags: usize) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..lags)
        .map(|k| {
            if k >= n {
                return 0.0;
            }
            a[k..n].iter().zip(&b[..n - k]).map(|(x, y)| x * y).sum::<f64>() / n as f64
        })
        .collect()
}

/// Sample moments of the reference `x`, disturbance `d` and filtered reference `xp`
/// for a controller of `taps` taps.
pub fn estimate_statistics(x: &[f64], d: &[f64], xp: &[f64], taps: usize) -> Result<StatisticsSnapshot> {
    if x.len() != d.len() || x.len() != xp.len() {
        return Err(Error::InsufficientData(format!(
            "sequence lengths differ: x {}, d {}, x' {}",
            x.len(),
            d.len(),
            xp.len()
        )));
    }
    if taps == 0 || x.len() < 10 * taps {
        return Err(Error::InsufficientData(format!(
            "{} samples is fewer than 10 x {taps} taps",
            x.len()
        )));
    }
    let rx = cross_correlation(x, x, taps);
    let rxp = cross_correlation(xp, xp, taps);
    let p = cross_correlation(d, xp, taps);
    let sigma_d2 = d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64;
    Ok(StatisticsSnapshot {
        sigma_d2: Some(sigma_d2),
        sigma_x2: Some(rx[0]),
        r_x: Some(Matrix::toeplitz(&rx)),
        r_xp: Some(Matrix::toeplitz(&rxp)),
        p_dxp: Some(p),
        ..Default::default()
    })
}
