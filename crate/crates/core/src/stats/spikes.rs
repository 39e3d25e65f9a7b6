//! Spike census of a finite-γ path in real time.
//!
//! The path sits on a plateau near 0 or 1 and leaves it through jumps and
//! spikes. A bottom spike leaves the band `[0, δ)`, rises above `m` and comes
//! back to the band without reaching `(1 − δ, 1]`. Spikes are counted per
//! window of accumulated bottom-plateau time.

use alloc::vec::Vec;

use crate::limit::Boundary;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpikeCensus {
    ds: f64,
    delta: f64,
    m: f64,
    window: f64,
    stride: usize,
    plateau: Option<Boundary>,
    above: bool,
    steps: usize,
    bottom_time: f64,
    count: usize,
    /// Spike counts of the completed windows.
    pub counts: Vec<usize>,
    /// Values of `Q` every `stride` steps while on the bottom plateau.
    pub samples: Vec<f64>,
}

impl SpikeCensus {
    pub fn new(ds: f64, delta: f64, m: f64, window: f64, stride: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < m && m < 1.0 - delta) {
            return Err(Error::InvalidArgument("need 0 < delta < m < 1 - delta"));
        }
        if !(ds > 0.0 && window > 0.0) || stride == 0 {
            return Err(Error::InvalidArgument("ds, window and stride must be positive"));
        }
        Ok(SpikeCensus {
            ds,
            delta,
            m,
            window,
            stride,
            plateau: None,
            above: false,
            steps: 0,
            bottom_time: 0.0,
            count: 0,
            counts: Vec::new(),
            samples: Vec::new(),
        })
    }

    /// Feeds the value after one step of length `ds`.
    pub fn push(&mut self, q: f64) {
        let bottom = self.plateau == Some(Boundary::Lower);
        if bottom {
            self.bottom_time += self.ds;
            if self.steps.is_multiple_of(self.stride) {
                self.samples.push(q);
            }
        }
        self.steps += 1;
        if q < self.delta {
            if bottom && self.above {
                self.count += 1;
            }
            self.plateau = Some(Boundary::Lower);
            self.above = false;
        } else if q > 1.0 - self.delta {
            self.plateau = Some(Boundary::Upper);
            self.above = false;
        } else if bottom && q > self.m {
            self.above = true;
        }
        if self.bottom_time >= self.window {
            self.counts.push(self.count);
            self.count = 0;
            self.bottom_time -= self.window;
        }
    }

    pub fn mean_count(&self) -> Option<f64> {
        if self.counts.is_empty() {
            None
        } else {
            Some(self.counts.iter().sum::<usize>() as f64 / self.counts.len() as f64)
        }
    }

    /// Merges the completed windows and samples of another census.
    pub fn absorb(&mut self, other: &SpikeCensus) {
        self.counts.extend_from_slice(&other.counts);
        self.samples.extend_from_slice(&other.samples);
    }
}
