//! Deterministic signal primitives: FIR filtering, delay lines, acoustic path
//! propagation, the output saturation stage, and seeded noise sources.
//!
//! Buffers are ordered newest first everywhere, so tap `k` of a filter always
//! multiplies the sample delayed by `k`.

mod fir;
mod noise;
mod saturation;

pub(crate) use fir::{convolve, dot};
pub use fir::{path_propagate, DelayLine, FirFilter, FirPath};
pub use noise::{NoiseGenerator, NoiseSource, GENERATOR_ID};
pub use saturation::{clip, SaturationModel};
