use ndarray::Array2;

use super::{check_shape, entropy_bits, histogram_counts};
use crate::error::{AlqaError, Result};

pub const GRADIENT_NAMES: [&str; 11] = [
    "mean_abs_gx",
    "std_abs_gx",
    "max_abs_gx",
    "mean_abs_gy",
    "std_abs_gy",
    "max_abs_gy",
    "mean_grad",
    "std_grad",
    "max_grad",
    "normalized_grad_sq",
    "grad_entropy",
];

const ENTROPY_BINS: usize = 32;

fn mean_std_max(v: &[f64]) -> [f64; 3] {
    if v.is_empty() {
        return [0.0; 3];
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    [mean, var.sqrt(), v.iter().copied().fold(0.0, f64::max)]
}

/// Central-difference gradient statistics over foreground pixels that have
/// both neighbors inside the image in each direction.
pub fn gradient_features(slice: &Array2<f64>, mask: &Array2<bool>) -> Result<Vec<f64>> {
    check_shape(slice, mask)?;
    if !mask.iter().any(|m| *m) {
        return Err(AlqaError::EmptyRegion("gradient: empty mask".into()));
    }
    let (h, w) = slice.dim();
    let (mut gx, mut gy, mut mag) = (Vec::new(), Vec::new(), Vec::new());
    let mut sum_i2 = 0.0;
    let mut sum_g2 = 0.0;
    for ((r, c), &m) in mask.indexed_iter() {
        if !m {
            continue;
        }
        sum_i2 += slice[[r, c]].powi(2);
        if r == 0 || c == 0 || r + 1 == h || c + 1 == w {
            continue;
        }
        let dx = (slice[[r, c + 1]] - slice[[r, c - 1]]) / 2.0;
        let dy = (slice[[r + 1, c]] - slice[[r - 1, c]]) / 2.0;
        gx.push(dx.abs());
        gy.push(dy.abs());
        sum_g2 += dx * dx + dy * dy;
        mag.push(dx.hypot(dy));
    }
    let mut out = Vec::with_capacity(GRADIENT_NAMES.len());
    out.extend(mean_std_max(&gx));
    out.extend(mean_std_max(&gy));
    let mag_stats = mean_std_max(&mag);
    out.extend(mag_stats);
    out.push(if sum_i2 > 0.0 { sum_g2 / sum_i2 } else { 0.0 });
    let counts = histogram_counts(&mag, 0.0, mag_stats[2], ENTROPY_BINS);
    out.push(entropy_bits(&counts));
    Ok(out)
}
