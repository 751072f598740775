//! Two-phase Chan-Vese foreground/background segmentation, initialized with
//! a rounded rectangle.
//!
//! The level set is a bounded signed distance (clamped to `±band`) evolved by
//! the Chan-Vese gradient flow. Every step is checked against the discrete
//! energy `mu·Length + λ1·Σ_in (I - c1)² + λ2·Σ_out (I - c2)²` and halved
//! until the energy does not increase.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{AlqaError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    /// Length weight relative to the squared intensity range of the slice.
    pub mu: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub max_iters: usize,
    /// Convergence threshold on the mean absolute level-set change.
    pub tol: f64,
    pub dt: f64,
    /// Inset of the initial rectangle as a fraction of each dimension.
    pub init_margin: f64,
    /// Corner radius as a fraction of min(height, width).
    pub corner_radius: f64,
    pub reinit_every: usize,
    /// Clamp of the signed distance level set, in pixels.
    pub band: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            mu: 0.2,
            lambda1: 1.0,
            lambda2: 1.0,
            max_iters: 200,
            tol: 1e-3,
            dt: 0.5,
            init_margin: 0.1,
            corner_radius: 0.1,
            reinit_every: 20,
            band: 2.0,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.mu,
            self.lambda1,
            self.lambda2,
            self.tol,
            self.dt,
            self.init_margin,
            self.corner_radius,
            self.band,
        ]
        .iter()
        .all(|v| v.is_finite());
        let ok = finite
            && self.mu >= 0.0
            && self.lambda1 > 0.0
            && self.lambda2 > 0.0
            && self.tol > 0.0
            && self.dt > 0.0
            && self.init_margin > 0.0
            && self.init_margin < 0.5
            && self.corner_radius >= 0.0
            && self.band > 0.0;
        if !ok {
            return Err(AlqaError::Parameter(format!("invalid segmentation config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mask {
    pub pixels: Array2<bool>,
    /// Mean intensity inside.
    pub c1: f64,
    /// Mean intensity outside.
    pub c2: f64,
}

impl Mask {
    pub fn area(&self) -> usize {
        self.pixels.iter().filter(|p| **p).count()
    }
}

/// Per-iteration record of the evolution.
#[derive(Clone, Debug, Default)]
pub struct SegmentationTrace {
    /// Energy of the initial partition followed by one entry per iteration.
    pub energies: Vec<f64>,
    /// (c1, c2) of the partition after each iteration.
    pub means: Vec<(f64, f64)>,
    pub iterations: usize,
    pub converged: bool,
}

/// Rounded rectangle inset by `margin·dim`, corners rounded by quarter
/// circles of radius `corner_radius·min(h, w)`.
pub fn init_mask(height: usize, width: usize, margin: f64, corner_radius: f64) -> Array2<bool> {
    let inset = |n: usize| {
        let lo = (margin * n as f64).round() as usize;
        let hi = n.saturating_sub(lo).max(lo + 1).min(n);
        (lo.min(n - 1), hi)
    };
    let (top, bottom) = inset(height);
    let (left, right) = inset(width);
    let half_extent = ((bottom - top).min(right - left)) as f64 / 2.0;
    let radius = (corner_radius * height.min(width) as f64).min(half_extent);
    let (t, b, l, r) = (top as f64, bottom as f64, left as f64, right as f64);

    Array2::from_shape_fn((height, width), |(row, col)| {
        if row < top || row >= bottom || col < left || col >= right {
            return false;
        }
        if radius <= 0.0 {
            return true;
        }
        let (y, x) = (row as f64 + 0.5, col as f64 + 0.5);
        let cy = if y < t + radius {
            t + radius
        } else if y > b - radius {
            b - radius
        } else {
            return true;
        };
        let cx = if x < l + radius {
            l + radius
        } else if x > r - radius {
            r - radius
        } else {
            return true;
        };
        (y - cy).powi(2) + (x - cx).powi(2) <= radius * radius
    })
}

/// (c1, c2): exact means inside and outside the partition.
pub fn region_means(image: &Array2<f64>, inside: &Array2<bool>) -> (f64, f64) {
    let (mut s1, mut n1, mut s2, mut n2) = (0.0, 0usize, 0.0, 0usize);
    Zip::from(image).and(inside).for_each(|&v, &m| {
        if m {
            s1 += v;
            n1 += 1;
        } else {
            s2 += v;
            n2 += 1;
        }
    });
    let c1 = if n1 > 0 { s1 / n1 as f64 } else { 0.0 };
    let c2 = if n2 > 0 { s2 / n2 as f64 } else { 0.0 };
    (c1, c2)
}

/// Discrete boundary length: Σ |forward-difference gradient of the indicator|.
pub fn partition_length(inside: &Array2<bool>) -> f64 {
    let (h, w) = inside.dim();
    let mut total = 0.0;
    for r in 0..h {
        for c in 0..w {
            let v = inside[[r, c]];
            let dx = c + 1 < w && inside[[r, c + 1]] != v;
            let dy = r + 1 < h && inside[[r + 1, c]] != v;
            total += match (dx, dy) {
                (true, true) => std::f64::consts::SQRT_2,
                (true, false) | (false, true) => 1.0,
                (false, false) => 0.0,
            };
        }
    }
    total
}

/// Chan-Vese energy of a partition with its optimal (mean) constants.
pub fn chan_vese_energy(image: &Array2<f64>, inside: &Array2<bool>, mu: f64, lambda1: f64, lambda2: f64) -> f64 {
    let (c1, c2) = region_means(image, inside);
    let mut fidelity = 0.0;
    Zip::from(image).and(inside).for_each(|&v, &m| {
        fidelity += if m {
            lambda1 * (v - c1).powi(2)
        } else {
            lambda2 * (v - c2).powi(2)
        };
    });
    mu * partition_length(inside) + fidelity
}

/// 1D squared Euclidean distance transform (Felzenszwalb & Huttenlocher).
fn edt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let mut first = None;
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        if first.is_none() {
            first = Some(q);
            v[0] = q;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * q as f64 - 2.0 * p as f64);
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    if first.is_none() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        *o = (q as f64 - p as f64).powi(2) + f[p];
    }
}

/// Euclidean distance from each pixel to the nearest pixel where `target`
/// is true (infinite when there is none).
pub fn distance_to(target: &Array2<bool>) -> Array2<f64> {
    let (h, w) = target.dim();
    let mut grid = target.mapv(|t| if t { 0.0 } else { f64::INFINITY });
    let mut col_in = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    for c in 0..w {
        for r in 0..h {
            col_in[r] = grid[[r, c]];
        }
        edt_1d(&col_in, &mut col_out);
        for r in 0..h {
            grid[[r, c]] = col_out[r];
        }
    }
    let mut row_in = vec![0.0; w];
    let mut row_out = vec![0.0; w];
    for r in 0..h {
        for c in 0..w {
            row_in[c] = grid[[r, c]];
        }
        edt_1d(&row_in, &mut row_out);
        for c in 0..w {
            grid[[r, c]] = row_out[c].sqrt();
        }
    }
    grid
}

/// Signed distance (positive inside), offset by half a pixel so the zero
/// level lies between inside and outside pixel centers, clamped to ±band.
fn bounded_signed_distance(inside: &Array2<bool>, band: f64) -> Array2<f64> {
    let outside = inside.mapv(|m| !m);
    let to_out = distance_to(&outside);
    let to_in = distance_to(inside);
    Zip::from(inside)
        .and(&to_out)
        .and(&to_in)
        .map_collect(|&m, &dout, &din| {
            let d = if m { dout - 0.5 } else { -(din - 0.5) };
            if d.is_finite() {
                d.clamp(-band, band)
            } else if m {
                band
            } else {
                -band
            }
        })
}

fn curvature(phi: &Array2<f64>) -> Array2<f64> {
    let (h, w) = phi.dim();
    let at = |r: isize, c: isize| phi[[r.clamp(0, h as isize - 1) as usize, c.clamp(0, w as isize - 1) as usize]];
    let eta = 1e-8;
    // normalized gradient at each pixel from central differences
    let mut nx = Array2::zeros((h, w));
    let mut ny = Array2::zeros((h, w));
    for r in 0..h as isize {
        for c in 0..w as isize {
            let gx = (at(r, c + 1) - at(r, c - 1)) / 2.0;
            let gy = (at(r + 1, c) - at(r - 1, c)) / 2.0;
            let norm = (gx * gx + gy * gy + eta).sqrt();
            nx[[r as usize, c as usize]] = gx / norm;
            ny[[r as usize, c as usize]] = gy / norm;
        }
    }
    let atn = |a: &Array2<f64>, r: isize, c: isize| a[[r.clamp(0, h as isize - 1) as usize, c.clamp(0, w as isize - 1) as usize]];
    Array2::from_shape_fn((h, w), |(r, c)| {
        let (r, c) = (r as isize, c as isize);
        (atn(&nx, r, c + 1) - atn(&nx, r, c - 1)) / 2.0 + (atn(&ny, r + 1, c) - atn(&ny, r - 1, c)) / 2.0
    })
}

pub fn chan_vese(slice: &Array2<f64>, cfg: &SegmentationConfig) -> Result<Mask> {
    chan_vese_traced(slice, cfg).map(|(mask, _)| mask)
}

/// As [`chan_vese`], also returning the energy and mean history.
pub fn chan_vese_traced(slice: &Array2<f64>, cfg: &SegmentationConfig) -> Result<(Mask, SegmentationTrace)> {
    cfg.validate()?;
    if slice.iter().any(|v| !v.is_finite()) {
        return Err(AlqaError::NonFinite("slice passed to chan_vese".into()));
    }
    let (h, w) = slice.dim();
    if h == 0 || w == 0 {
        return Err(AlqaError::Shape("empty slice".into()));
    }
    let mut inside = init_mask(h, w, cfg.init_margin, cfg.corner_radius);
    let (lo, hi) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    let mu = cfg.mu * range * range;
    let energy = |m: &Array2<bool>| chan_vese_energy(slice, m, mu, cfg.lambda1, cfg.lambda2);

    let mut trace = SegmentationTrace {
        energies: vec![energy(&inside)],
        ..SegmentationTrace::default()
    };
    let (mut c1, mut c2) = region_means(slice, &inside);
    if range == 0.0 || cfg.max_iters == 0 {
        trace.converged = range == 0.0;
        return Ok((Mask { pixels: inside, c1, c2 }, trace));
    }

    let scale = 1.0 / (range * range);
    let mut phi = bounded_signed_distance(&inside, cfg.band);
    let mut current_energy = trace.energies[0];
    for iter in 1..=cfg.max_iters {
        let kappa = curvature(&phi);
        let force = Zip::from(slice).and(&kappa).map_collect(|&v, &k| {
            scale * (mu * k - cfg.lambda1 * (v - c1).powi(2) + cfg.lambda2 * (v - c2).powi(2))
        });

        let mut step = cfg.dt;
        let mut accepted = None;
        for _ in 0..6 {
            let candidate = Zip::from(&phi)
                .and(&force)
                .map_collect(|&p, &f| (p + step * f).clamp(-cfg.band, cfg.band));
            let cand_inside = candidate.mapv(|p| p > 0.0);
            let e = if cand_inside == inside { current_energy } else { energy(&cand_inside) };
            if e <= current_energy + 1e-12 * current_energy.abs().max(1.0) {
                accepted = Some((candidate, cand_inside, e));
                break;
            }
            step *= 0.5;
        }

        let Some((candidate, cand_inside, e)) = accepted else {
            trace.energies.push(current_energy);
            trace.means.push((c1, c2));
            trace.iterations = iter;
            trace.converged = true;
            break;
        };
        let change = Zip::from(&candidate)
            .and(&phi)
            .fold(0.0, |acc, &a, &b| acc + (a - b).abs())
            / (h * w) as f64;
        phi = candidate;
        inside = cand_inside;
        current_energy = e;
        (c1, c2) = region_means(slice, &inside);
        if cfg.reinit_every > 0 && iter % cfg.reinit_every == 0 {
            phi = bounded_signed_distance(&inside, cfg.band);
        }
        trace.energies.push(current_energy);
        trace.means.push((c1, c2));
        trace.iterations = iter;
        if change < cfg.tol {
            trace.converged = true;
            break;
        }
    }
    Ok((Mask { pixels: inside, c1, c2 }, trace))
}

/// Row-major run-length encoding of a mask: alternating run lengths,
/// starting with a run of `false`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskRle {
    pub height: usize,
    pub width: usize,
    pub runs: Vec<usize>,
}

impl MaskRle {
    pub fn encode(mask: &Array2<bool>) -> Self {
        let (height, width) = mask.dim();
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0usize;
        for &p in mask.iter() {
            if p == current {
                len += 1;
            } else {
                runs.push(len);
                current = p;
                len = 1;
            }
        }
        runs.push(len);
        Self { height, width, runs }
    }

    pub fn decode(&self) -> Result<Array2<bool>> {
        if self.runs.iter().sum::<usize>() != self.height * self.width {
            return Err(AlqaError::Shape("run lengths do not cover the mask".into()));
        }
        let mut data = Vec::with_capacity(self.height * self.width);
        for (i, &n) in self.runs.iter().enumerate() {
            data.extend(std::iter::repeat_n(i % 2 == 1, n));
        }
        Array2::from_shape_vec((self.height, self.width), data).map_err(|e| AlqaError::Shape(e.to_string()))
    }
}
