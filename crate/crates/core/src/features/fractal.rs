use ndarray::Array2;

use super::{foreground_values, histogram_counts};
use crate::error::Result;

pub const FRACTAL_NAMES: [&str; 6] = ["box_dimension", "lacunarity_2", "lacunarity_4", "lacunarity_8", "occupancy", "degenerate"];
pub const BOX_SIZES: [usize; 5] = [2, 4, 8, 16, 32];
pub const LACUNARITY_SIZES: [usize; 3] = [2, 4, 8];

/// Otsu threshold over a 256-bin histogram; values strictly above it are
/// foreground. Returns `None` for constant input.
pub fn otsu_threshold(values: &[f64]) -> Option<f64> {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return None;
    }
    let bins = 256;
    let counts = histogram_counts(values, lo, hi, bins);
    let total: f64 = counts.iter().sum();
    let sum_all: f64 = counts.iter().enumerate().map(|(i, c)| i as f64 * c).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_k) = (-1.0, 0);
    for (k, c) in counts.iter().enumerate().take(bins - 1) {
        w0 += c;
        sum0 += k as f64 * c;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let between = w0 * w1 * (sum0 / w0 - (sum_all - sum0) / w1).powi(2);
        if between > best {
            best = between;
            best_k = k;
        }
    }
    Some(lo + (best_k + 1) as f64 * (hi - lo) / bins as f64)
}

/// Number of `size`×`size` grid boxes (anchored at the origin) containing at
/// least one set pixel.
pub fn box_count(binary: &Array2<bool>, size: usize) -> usize {
    let (h, w) = binary.dim();
    let mut n = 0;
    for br in (0..h).step_by(size) {
        for bc in (0..w).step_by(size) {
            let hit = (br..(br + size).min(h)).any(|r| (bc..(bc + size).min(w)).any(|c| binary[[r, c]]));
            n += usize::from(hit);
        }
    }
    n
}

/// Least-squares slope of log N(s) against log(1/s), clamped to [0, 2].
pub fn box_counting_dimension(binary: &Array2<bool>, sizes: &[usize]) -> f64 {
    let pts: Vec<(f64, f64)> = sizes
        .iter()
        .map(|&s| (-(s as f64).ln(), box_count(binary, s)))
        .filter(|(_, n)| *n > 0)
        .map(|(x, n)| (x, (n as f64).ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxy / sxx).clamp(0.0, 2.0)
}

/// Gliding-box lacunarity E[M²]/E[M]² of box masses; 0 when no mass.
pub fn lacunarity(binary: &Array2<bool>, size: usize) -> f64 {
    let (h, w) = binary.dim();
    if size > h || size > w {
        return 0.0;
    }
    // summed-area table for O(1) box masses
    let mut sat = Array2::<f64>::zeros((h + 1, w + 1));
    for r in 0..h {
        for c in 0..w {
            sat[[r + 1, c + 1]] = f64::from(u8::from(binary[[r, c]])) + sat[[r, c + 1]] + sat[[r + 1, c]] - sat[[r, c]];
        }
    }
    let (mut s1, mut s2, mut n) = (0.0, 0.0, 0.0);
    for r in 0..=h - size {
        for c in 0..=w - size {
            let m = sat[[r + size, c + size]] - sat[[r, c + size]] - sat[[r + size, c]] + sat[[r, c]];
            s1 += m;
            s2 += m * m;
            n += 1.0;
        }
    }
    if s1 == 0.0 {
        return 0.0;
    }
    (s2 / n) / (s1 / n).powi(2)
}

/// Box-counting dimension and lacunarity of the Otsu-binarized foreground.
/// An all-set binarization reports dimension 2, an empty one 0, both with
/// the degeneracy flag raised.
pub fn fractal_features(slice: &Array2<f64>, mask: &Array2<bool>) -> Result<Vec<f64>> {
    let values = foreground_values(slice, mask)?;
    let binary = match otsu_threshold(&values) {
        Some(t) => Array2::from_shape_fn(slice.dim(), |(r, c)| mask[[r, c]] && slice[[r, c]] > t),
        None => mask.clone(),
    };
    let set = binary.iter().filter(|b| **b).count();
    let occupancy = set as f64 / values.len() as f64;
    let lac = LACUNARITY_SIZES.map(|s| lacunarity(&binary, s));
    let (dimension, degenerate) = if set == values.len() {
        (2.0, 1.0)
    } else if set == 0 {
        (0.0, 1.0)
    } else {
        (box_counting_dimension(&binary, &BOX_SIZES), 0.0)
    };
    Ok(vec![dimension, lac[0], lac[1], lac[2], occupancy, degenerate])
}
