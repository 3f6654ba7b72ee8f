//! Per-sample adaptive controllers sharing one step contract.
//!
//! All algorithms run through [`Controller`]. The error branch of every FxLMS
//! variant computes the same increment `(mu e) x'`, so the reduced cases (a
//! zero leak, an unreachable constraint, zero momentum) reproduce plain FxLMS
//! bit for bit.

mod config;
mod state;

pub use config::{Algorithm, ConstraintMode, ControllerConfig, LeakShape, ALGORITHM_ID};
pub use state::{Controller, StepOutput, DIVERGENCE_GUARD};
