//! Separable 2D FFT on row-major complex buffers.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse 2D transforms for one fixed shape.
pub struct Fft2 {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut Array2<Complex64>) {
        self.apply(data, false);
    }

    /// Inverse transform including the 1/(h*w) factor.
    pub fn inverse(&self, data: &mut Array2<Complex64>) {
        self.apply(data, true);
        let scale = 1.0 / (self.height * self.width) as f64;
        data.mapv_inplace(|v| v * scale);
    }

    fn apply(&self, data: &mut Array2<Complex64>, inverse: bool) {
        assert_eq!(data.dim(), (self.height, self.width), "fft shape mismatch");
        let (row_plan, col_plan) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        let buf = data
            .as_slice_mut()
            .expect("fft buffers are contiguous row-major");
        row_plan.process(buf);

        let mut column = vec![Complex64::new(0.0, 0.0); self.height];
        for c in 0..self.width {
            for r in 0..self.height {
                column[r] = buf[r * self.width + c];
            }
            col_plan.process(&mut column);
            for r in 0..self.height {
                buf[r * self.width + c] = column[r];
            }
        }
    }
}

pub fn to_complex(image: &Array2<f64>) -> Array2<Complex64> {
    image.mapv(|v| Complex64::new(v, 0.0))
}

/// Signed frequency index for position `k` of an `n`-point transform.
pub fn signed_frequency(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}
