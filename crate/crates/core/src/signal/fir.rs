use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

/// FIR tap-weight vector. Tap 0 multiplies the newest sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FirFilter {
    taps: Vec<f64>,
}

impl FirFilter {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(contract("FIR filter needs at least one tap"));
        }
        if let Some(i) = taps.iter().position(|t| !t.is_finite()) {
            return Err(contract(format!("tap {i} is not finite")));
        }
        Ok(Self { taps })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![0.0; len])
    }

    /// Single-tap filter with gain 1.
    pub fn identity() -> Self {
        Self { taps: vec![1.0] }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sum of squared taps (energy of the impulse response).
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    pub fn is_all_zero(&self) -> bool {
        self.taps.iter().all(|&t| t == 0.0)
    }

    /// Inner product of the taps with the buffered history.
    pub fn process(&self, line: &DelayLine) -> Result<f64> {
        if line.capacity() != self.len() {
            return Err(contract(format!(
                "filter length {} does not match delay line capacity {}",
                self.len(),
                line.capacity()
            )));
        }
        Ok(dot(&self.taps, line.samples()))
    }

    /// Full (linear) convolution of the taps with `signal`.
    pub fn convolve(&self, signal: &[f64]) -> Vec<f64> {
        convolve(&self.taps, signal)
    }
}

impl TryFrom<Vec<f64>> for FirFilter {
    type Error = Error;

    fn try_from(taps: Vec<f64>) -> Result<Self> {
        Self::new(taps)
    }
}

impl From<FirFilter> for Vec<f64> {
    fn from(f: FirFilter) -> Self {
        f.taps
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Tapped history of the most recent samples, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine {
    buf: Vec<f64>,
}

impl DelayLine {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "delay line capacity must be at least 1");
        Self {
            buf: vec![0.0; capacity],
        }
    }

    pub fn from_samples(newest_first: Vec<f64>) -> Self {
        assert!(!newest_first.is_empty(), "delay line capacity must be at least 1");
        Self { buf: newest_first }
    }

    pub fn capacity(&self) -> usize {
        self.buf.len()
    }

    /// Shift every entry back by one and place `sample` at the front.
    pub fn push(&mut self, sample: f64) {
        let n = self.buf.len();
        self.buf.copy_within(0..n - 1, 1);
        self.buf[0] = sample;
    }

    pub fn samples(&self) -> &[f64] {
        &self.buf
    }

    pub fn newest(&self) -> f64 {
        self.buf[0]
    }

    pub fn clear(&mut self) {
        self.buf.iter_mut().for_each(|s| *s = 0.0);
    }

    pub fn power(&self) -> f64 {
        dot(&self.buf, &self.buf)
    }
}

/// An acoustic or electro-acoustic path: a FIR response plus its own input history.
#[derive(Debug, Clone, PartialEq)]
pub struct FirPath {
    filter: FirFilter,
    state: DelayLine,
}

impl FirPath {
    pub fn new(filter: FirFilter) -> Self {
        let state = DelayLine::new(filter.len());
        Self { filter, state }
    }

    pub fn filter(&self) -> &FirFilter {
        &self.filter
    }

    /// Push `input` into the path history and return the streaming convolution output.
    pub fn propagate(&mut self, input: f64) -> Result<f64> {
        if !input.is_finite() {
            return Err(Error::Divergence {
                step: 0,
                reason: format!("non-finite path input {input}"),
                last_weights: Vec::new(),
            });
        }
        self.state.push(input);
        Ok(dot(self.filter.taps(), self.state.samples()))
    }

    pub fn reset(&mut self) {
        self.state.clear();
    }
}

/// Stream `signal` through `path` from a zero initial state.
pub fn path_propagate(path: &FirFilter, signal: &[f64]) -> Result<Vec<f64>> {
    let mut p = FirPath::new(path.clone());
    signal.iter().map(|&s| p.propagate(s)).collect()
}
