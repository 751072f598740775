use ndarray::Array2;

use super::check_shape;
use crate::error::{AlqaError, Result};

pub const LBP_UNIFORM_BINS: usize = 59;

/// Circular neighbor offsets (dr, dc); offsets within 1e-9 of an integer
/// are snapped so axis-aligned neighbors sample a pixel exactly.
pub fn neighbor_offsets(radius: f64, neighbors: usize) -> Vec<(f64, f64)> {
    let snap = |v: f64| if (v - v.round()).abs() < 1e-9 { v.round() } else { v };
    (0..neighbors)
        .map(|p| {
            let theta = 2.0 * std::f64::consts::PI * p as f64 / neighbors as f64;
            (snap(-radius * theta.sin()), snap(radius * theta.cos()))
        })
        .collect()
}

/// Bilinear sample written as nested lerps so equal corners give exactly
/// that value.
fn bilinear(img: &Array2<f64>, y: f64, x: f64) -> f64 {
    let (y0, x0) = (y.floor(), x.floor());
    let (fy, fx) = (y - y0, x - x0);
    let (r0, c0) = (y0 as usize, x0 as usize);
    let (h, w) = img.dim();
    let r1 = (r0 + 1).min(h - 1);
    let c1 = (c0 + 1).min(w - 1);
    let lerp = |a: f64, b: f64, t: f64| if t == 0.0 { a } else { a + t * (b - a) };
    let top = lerp(img[[r0, c0]], img[[r0, c1]], fx);
    let bottom = lerp(img[[r1, c0]], img[[r1, c1]], fx);
    lerp(top, bottom, fy)
}

/// LBP code at (r, c); bit p is set when neighbor p ≥ center.
pub fn lbp_code(img: &Array2<f64>, r: usize, c: usize, offsets: &[(f64, f64)]) -> usize {
    let center = img[[r, c]];
    offsets.iter().enumerate().fold(0usize, |code, (p, (dr, dc))| {
        let v = bilinear(img, r as f64 + dr, c as f64 + dc);
        if v >= center {
            code | (1 << p)
        } else {
            code
        }
    })
}

fn transitions(code: usize, bits: usize) -> u32 {
    let rotated = ((code >> 1) | ((code & 1) << (bits - 1))) & ((1 << bits) - 1);
    (code ^ rotated).count_ones()
}

/// Maps each 8-bit code to its uniform-pattern bin: the 58 codes with at most
/// two circular transitions get bins 0..58 in ascending code order, the rest
/// share bin 58.
pub fn uniform_map() -> [usize; 256] {
    let mut map = [LBP_UNIFORM_BINS - 1; 256];
    let mut next = 0;
    for (code, slot) in map.iter_mut().enumerate() {
        if transitions(code, 8) <= 2 {
            *slot = next;
            next += 1;
        }
    }
    map
}

/// 256-bin code histogram followed by the 59-bin uniform histogram, both
/// normalized, over foreground pixels whose circle lies inside the image.
pub fn lbp_features(slice: &Array2<f64>, mask: &Array2<bool>, radius: f64, neighbors: usize) -> Result<Vec<f64>> {
    check_shape(slice, mask)?;
    if neighbors != 8 {
        return Err(AlqaError::Parameter("LBP histograms are defined for 8 neighbors".into()));
    }
    let offsets = neighbor_offsets(radius, neighbors);
    let (h, w) = slice.dim();
    let border = radius.ceil() as usize;
    let map = uniform_map();
    let mut codes = vec![0.0; 256];
    let mut uniform = vec![0.0; LBP_UNIFORM_BINS];
    let mut n = 0usize;
    for r in border..h.saturating_sub(border) {
        for c in border..w.saturating_sub(border) {
            if !mask[[r, c]] {
                continue;
            }
            let code = lbp_code(slice, r, c, &offsets);
            codes[code] += 1.0;
            uniform[map[code]] += 1.0;
            n += 1;
        }
    }
    if n == 0 {
        return Err(AlqaError::EmptyRegion("LBP: no interior foreground pixel".into()));
    }
    let total = n as f64;
    Ok(codes.into_iter().chain(uniform).map(|v| v / total).collect())
}
