//! Separable d-dimensional FFT on n^d grids (n a power of two), built on
//! 1-D complex transforms applied axis by axis.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct GridFft {
    n: usize,
    d: u32,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl GridFft {
    pub fn new(d: u32, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            d,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn total(&self) -> usize {
        self.n.pow(self.d)
    }

    /// In-place forward DFT over every axis (unnormalized).
    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, true);
    }

    /// In-place inverse DFT over every axis, normalized by n^d.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, false);
        let norm = 1.0 / self.total() as f64;
        for v in data.iter_mut() {
            *v *= norm;
        }
    }

    fn apply(&self, data: &mut [Complex64], fwd: bool) {
        assert_eq!(data.len(), self.total());
        let n = self.n;
        let fft = if fwd { &self.forward } else { &self.inverse };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for axis in 0..self.d {
            let stride = n.pow(self.d - 1 - axis);
            let lines = self.total() / n;
            for li in 0..lines {
                // base offset of this line: split the flat line index around
                // the axis stride
                let block = li / stride;
                let rem = li % stride;
                let base = block * stride * n + rem;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}
