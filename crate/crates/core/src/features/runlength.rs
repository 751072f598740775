use ndarray::Array2;

use super::{check_shape, quantize};
use crate::error::{AlqaError, Result};

pub const RUN_LENGTH_STATS: [&str; 5] = ["sre", "lre", "gln", "rln", "rp"];

/// Run-length matrix `R[level][length-1]` along (dr, dc). Runs are maximal
/// sequences of consecutive foreground pixels sharing a level.
pub fn run_length_matrix(levels: &Array2<usize>, mask: &Array2<bool>, n_levels: usize, step: (isize, isize)) -> Array2<f64> {
    let (h, w) = levels.dim();
    let max_len = h.max(w);
    let mut rl = Array2::zeros((n_levels, max_len));
    let inside = |r: isize, c: isize| r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w && mask[[r as usize, c as usize]];
    for r in 0..h as isize {
        for c in 0..w as isize {
            if !inside(r, c) {
                continue;
            }
            let level = levels[[r as usize, c as usize]];
            let (pr, pc) = (r - step.0, c - step.1);
            if inside(pr, pc) && levels[[pr as usize, pc as usize]] == level {
                continue;
            }
            let mut len = 1;
            let (mut nr, mut nc) = (r + step.0, c + step.1);
            while inside(nr, nc) && levels[[nr as usize, nc as usize]] == level {
                len += 1;
                nr += step.0;
                nc += step.1;
            }
            rl[[level, len - 1]] += 1.0;
        }
    }
    rl
}

/// SRE, LRE, GLN, RLN and run percentage of a run-length matrix.
pub fn run_length_stats(rl: &Array2<f64>, n_pixels: usize) -> [f64; 5] {
    let runs: f64 = rl.sum();
    if runs == 0.0 {
        return [0.0; 5];
    }
    let (mut sre, mut lre) = (0.0, 0.0);
    for ((_, j), &v) in rl.indexed_iter() {
        let len = (j + 1) as f64;
        sre += v / (len * len);
        lre += v * len * len;
    }
    let gln: f64 = rl.rows().into_iter().map(|r| r.sum().powi(2)).sum();
    let rln: f64 = rl.columns().into_iter().map(|c| c.sum().powi(2)).sum();
    [sre / runs, lre / runs, gln / runs, rln / runs, runs / n_pixels as f64]
}

/// Run-length statistics at 0° (along rows) and 90° (along columns).
pub fn run_length_features(slice: &Array2<f64>, mask: &Array2<bool>, n_levels: usize) -> Result<Vec<f64>> {
    check_shape(slice, mask)?;
    let n_pixels = mask.iter().filter(|m| **m).count();
    if n_pixels == 0 {
        return Err(AlqaError::EmptyRegion("run length: empty mask".into()));
    }
    let levels = quantize(slice, mask, n_levels);
    let mut out = Vec::with_capacity(10);
    for step in [(0, 1), (1, 0)] {
        out.extend(run_length_stats(&run_length_matrix(&levels, mask, n_levels, step), n_pixels));
    }
    Ok(out)
}
