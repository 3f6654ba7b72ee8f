//! Output-constrained adaptive active noise control.
//!
//! The crate is `no_std` (it needs `alloc`) and holds the numerical parts:
//! signal primitives, estimation of the constraint parameters, the FxLMS
//! controller family, performance metrics, and the closed-loop simulator.
//! File formats, configuration parsing and the command line live in the
//! `anc-sim` crate.
#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod controller;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod metrics;
pub mod signal;
pub mod sim;

pub use error::{Error, Result};
