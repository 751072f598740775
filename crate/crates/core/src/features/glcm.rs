use ndarray::Array2;

use super::{check_shape, quantize};
use crate::error::{AlqaError, Result};

pub const GLCM_STATS: [&str; 5] = ["contrast", "correlation", "energy", "homogeneity", "entropy"];

/// Pixel offset (dr, dc) for a distance and an angle in degrees, with 0° to
/// the right and 90° upward.
pub fn glcm_offset(distance: usize, angle_deg: u32) -> Result<(isize, isize)> {
    let d = distance as isize;
    match angle_deg {
        0 => Ok((0, d)),
        45 => Ok((-d, d)),
        90 => Ok((-d, 0)),
        135 => Ok((-d, -d)),
        _ => Err(AlqaError::Parameter(format!("unsupported GLCM angle {angle_deg}"))),
    }
}

/// Asymmetric co-occurrence counts `G[i][j]` of pixel pairs (p, p + offset)
/// with both pixels in the mask.
pub fn glcm_counts(levels: &Array2<usize>, mask: &Array2<bool>, n_levels: usize, offset: (isize, isize)) -> Array2<f64> {
    let (h, w) = levels.dim();
    let mut g = Array2::zeros((n_levels, n_levels));
    for r in 0..h {
        for c in 0..w {
            if !mask[[r, c]] {
                continue;
            }
            let (nr, nc) = (r as isize + offset.0, c as isize + offset.1);
            if nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w || !mask[[nr as usize, nc as usize]] {
                continue;
            }
            g[[levels[[r, c]], levels[[nr as usize, nc as usize]]]] += 1.0;
        }
    }
    g
}

/// `(G + Gᵀ) / sum`; `None` when there are no pairs.
pub fn symmetric_normalized(g: &Array2<f64>) -> Option<Array2<f64>> {
    let s = g + &g.t();
    let total = s.sum();
    (total > 0.0).then(|| s / total)
}

/// Haralick statistics of a normalized co-occurrence matrix. Correlation of
/// a matrix with zero marginal variance is defined as 1.
pub fn haralick(p: &Array2<f64>) -> [f64; 5] {
    let (mut mu_i, mut mu_j) = (0.0, 0.0);
    for ((i, j), &v) in p.indexed_iter() {
        mu_i += i as f64 * v;
        mu_j += j as f64 * v;
    }
    let (mut var_i, mut var_j, mut cov) = (0.0, 0.0, 0.0);
    let (mut contrast, mut energy, mut homogeneity, mut entropy) = (0.0, 0.0, 0.0, 0.0);
    for ((i, j), &v) in p.indexed_iter() {
        let (fi, fj) = (i as f64, j as f64);
        var_i += (fi - mu_i).powi(2) * v;
        var_j += (fj - mu_j).powi(2) * v;
        cov += (fi - mu_i) * (fj - mu_j) * v;
        contrast += (fi - fj).powi(2) * v;
        energy += v * v;
        homogeneity += v / (1.0 + (fi - fj).powi(2));
        if v > 0.0 {
            entropy -= v * v.log2();
        }
    }
    let correlation = if var_i > 0.0 && var_j > 0.0 { cov / (var_i * var_j).sqrt() } else { 1.0 };
    [contrast, correlation, energy, homogeneity, entropy]
}

/// Haralick statistics for each (distance, angle), distances outermost.
pub fn glcm_features(slice: &Array2<f64>, mask: &Array2<bool>, n_levels: usize, distances: &[usize], angles: &[u32]) -> Result<Vec<f64>> {
    check_shape(slice, mask)?;
    let levels = quantize(slice, mask, n_levels);
    let mut out = Vec::with_capacity(distances.len() * angles.len() * 5);
    let mut any_pairs = false;
    for &d in distances {
        for &a in angles {
            let g = glcm_counts(&levels, mask, n_levels, glcm_offset(d, a)?);
            match symmetric_normalized(&g) {
                Some(p) => {
                    any_pairs = true;
                    out.extend(haralick(&p));
                }
                None => out.extend([0.0; 5]),
            }
        }
    }
    if !any_pairs {
        return Err(AlqaError::EmptyRegion("GLCM: no valid pixel pairs".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_example() -> Array2<usize> {
        ndarray::arr2(&[[0, 0, 1, 1], [0, 0, 1, 1], [0, 2, 2, 2], [2, 2, 3, 3]])
    }

    #[test]
    fn hand_counted_pairs() {
        let g = glcm_counts(&worked_example(), &Array2::from_elem((4, 4), true), 4, glcm_offset(1, 0).unwrap());
        let expected = [((0, 0), 2.0), ((0, 1), 2.0), ((1, 1), 2.0), ((0, 2), 1.0), ((2, 2), 3.0), ((2, 3), 1.0), ((3, 3), 1.0)];
        for ((i, j), n) in expected {
            assert_eq!(g[[i, j]], n);
        }
        assert_eq!(g.sum(), 12.0);
        let contrast: f64 = g.indexed_iter().map(|((i, j), v)| (i as f64 - j as f64).powi(2) * v).sum::<f64>() / 12.0;
        assert!((contrast - 7.0 / 12.0).abs() < 1e-15);

        let p = symmetric_normalized(&g).unwrap();
        for ((i, j), v) in p.indexed_iter() {
            assert_eq!(*v, (g[[i, j]] + g[[j, i]]) / 24.0);
        }
        // symmetrization leaves the contrast unchanged
        assert!((haralick(&p)[0] - 7.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn constant_image() {
        let img = Array2::from_elem((6, 6), 4.0);
        let f = glcm_features(&img, &Array2::from_elem((6, 6), true), 8, &[1], &[0, 45, 90, 135]).unwrap();
        for k in 0..4 {
            assert_eq!(f[k * 5], 0.0);
            assert_eq!(f[k * 5 + 2], 1.0);
            assert_eq!(f[k * 5 + 3], 1.0);
        }
    }

    #[test]
    fn marginals_sum_to_one() {
        let img = Array2::from_shape_fn((13, 11), |(r, c)| ((r * 7 + c * 3) % 10) as f64);
        let mask = Array2::from_shape_fn((13, 11), |(r, c)| (r + c) % 5 != 0);
        let levels = quantize(&img, &mask, 8);
        for a in [0, 45, 90, 135] {
            let p = symmetric_normalized(&glcm_counts(&levels, &mask, 8, glcm_offset(1, a).unwrap())).unwrap();
            let rows: f64 = p.rows().into_iter().map(|r| r.sum()).sum();
            let cols: f64 = p.columns().into_iter().map(|c| c.sum()).sum();
            assert!((rows - 1.0).abs() < 1e-12 && (cols - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_pixel_has_no_pairs() {
        let img = Array2::zeros((3, 3));
        let mask = Array2::from_shape_fn((3, 3), |(r, c)| r == 1 && c == 1);
        assert!(glcm_features(&img, &mask, 8, &[1], &[0]).is_err());
    }
}
