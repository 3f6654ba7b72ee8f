//! Offline and online estimation: secondary-path identification, adaptive
//! inverse modeling, power gains, the degree of nonlinearity, optimal
//! Lagrangian and leak factors, and the constrained/leaky Wiener solutions.

mod gain;
mod identify;
mod stats;
mod wiener;

pub use gain::{
    band_power_gain, degree_of_nonlinearity, frame_power_gain, lambda_from_moments, magnitude_squared, optimal_gamma,
    optimal_lambda, Leak, MIN_BAND_GRID,
};
pub use identify::{
    identify_secondary_path, inverse_error, inverse_model, misalignment, predict_control, Identification, IdentifySpec,
    InverseModel, InverseModelSpec, TRAINING_GUARD,
};
pub use stats::{cross_correlation, estimate_statistics, StatisticsSnapshot};
pub use wiener::{output_power, residual_power, wiener_constrained, wiener_leaky, wiener_unconstrained};
