//! N-dimensional FFT over contiguous row-major blocks.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Reusable plans for a fixed row-major shape.
pub struct NdFft {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl NdFft {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        NdFft {
            shape: shape.to_vec(),
            forward: shape.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized transform of one block, in place.
    pub fn process(&self, data: &mut [Complex64], dir: Direction) {
        assert_eq!(data.len(), self.len(), "block length does not match shape");
        let plans = match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        let total = data.len();
        let mut stride = total;
        let mut line = Vec::new();
        for (axis, &n) in self.shape.iter().enumerate() {
            stride /= n;
            if n == 1 {
                continue;
            }
            line.resize(n, Complex64::new(0.0, 0.0));
            let outer = total / (n * stride);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * n * stride + inner;
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + k * stride];
                    }
                    plans[axis].process(&mut line);
                    for (k, value) in line.iter().enumerate() {
                        data[base + k * stride] = *value;
                    }
                }
            }
        }
    }
}

/// Signed frequency of FFT bin `k` out of `n`.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// FFT bin holding signed frequency `j`, if representable.
pub fn bin_of(j: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if j >= -half && j < n as i64 - half {
        Some(j.rem_euclid(n as i64) as usize)
    } else {
        None
    }
}
