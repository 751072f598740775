use ndarray::Array2;

use super::{entropy_bits, foreground_values, histogram_counts};
use crate::error::Result;

pub const HISTOGRAM_NAMES: [&str; 10] = [
    "mean", "variance", "skewness", "kurtosis", "entropy", "p05", "p50", "p95", "min", "max",
];

/// Lower-rank percentile: element `floor(p/100 · (n-1))` of the sorted values.
pub fn lower_percentile(sorted: &[f64], p: f64) -> f64 {
    let idx = ((p / 100.0) * (sorted.len() - 1) as f64).floor() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Foreground intensity statistics. Moments are population moments of the
/// values; entropy is taken over a `bins`-bin histogram spanning min..max.
pub fn histogram_features(slice: &Array2<f64>, mask: &Array2<bool>, bins: usize) -> Result<Vec<f64>> {
    let mut v = foreground_values(slice, mask)?;
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = v.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let m4 = v.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let (skew, kurt) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (0.0, 0.0)
    };
    let (lo, hi) = (v[0], v[v.len() - 1]);
    let counts = histogram_counts(&v, lo, hi, bins.max(1));
    Ok(vec![
        mean,
        m2,
        skew,
        kurt,
        entropy_bits(&counts),
        lower_percentile(&v, 5.0),
        lower_percentile(&v, 50.0),
        lower_percentile(&v, 95.0),
        lo,
        hi,
    ])
}
