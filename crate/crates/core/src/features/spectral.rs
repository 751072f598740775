use std::f64::consts::{PI, SQRT_2};

use ndarray::{Array2, Zip};

use super::{check_shape, entropy_bits};
use crate::error::{AlqaError, Result};
use crate::fft::{signed_frequency, to_complex, Fft2};

pub const SPECTRAL_BANDS: usize = 8;

/// Power spectra whose sum equals Σ I² (Parseval), with a normalized radial
/// frequency in [0, 1] per coefficient.
pub struct Spectrum {
    pub power: Array2<f64>,
    pub radius: Array2<f64>,
}

pub fn fourier_spectrum(image: &Array2<f64>) -> Spectrum {
    let (h, w) = image.dim();
    let mut data = to_complex(image);
    Fft2::new(h, w).forward(&mut data);
    let scale = 1.0 / (h * w) as f64;
    let power = data.mapv(|z| z.norm_sqr() * scale);
    let (hh, hw) = ((h as f64 / 2.0).max(1.0), (w as f64 / 2.0).max(1.0));
    let radius = Array2::from_shape_fn((h, w), |(r, c)| {
        let fy = signed_frequency(r, h) / hh;
        let fx = signed_frequency(c, w) / hw;
        ((fy * fy + fx * fx).sqrt() / SQRT_2).min(1.0)
    });
    Spectrum { power, radius }
}

/// Orthonormal DCT-II basis matrix: row k holds basis function k.
pub fn dct_matrix(n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(k, i)| {
        let a = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        a * (PI * (i as f64 + 0.5) * k as f64 / n as f64).cos()
    })
}

pub fn dct2(image: &Array2<f64>) -> Array2<f64> {
    let (h, w) = image.dim();
    dct_matrix(h).dot(image).dot(&dct_matrix(w).t())
}

pub fn cosine_spectrum(image: &Array2<f64>) -> Spectrum {
    let (h, w) = image.dim();
    let power = dct2(image).mapv(|v| v * v);
    let radius = Array2::from_shape_fn((h, w), |(u, v)| {
        let fy = u as f64 / h as f64;
        let fx = v as f64 / w as f64;
        ((fy * fy + fx * fx).sqrt() / SQRT_2).min(1.0)
    });
    Spectrum { power, radius }
}

pub fn band_index(radius: f64, bands: usize) -> usize {
    ((radius * bands as f64) as usize).min(bands - 1)
}

/// Unnormalized energy per radial band.
pub fn band_energies(spec: &Spectrum, bands: usize) -> Vec<f64> {
    let mut e = vec![0.0; bands];
    Zip::from(&spec.power).and(&spec.radius).for_each(|&p, &r| e[band_index(r, bands)] += p);
    e
}

/// Relative band energies, per-band spectral entropies, total spectral
/// entropy and DC fraction (2·bands + 2 values).
pub fn spectrum_summary(spec: &Spectrum, bands: usize) -> Vec<f64> {
    let energies = band_energies(spec, bands);
    let total: f64 = energies.iter().sum();
    let mut per_band: Vec<Vec<f64>> = vec![Vec::new(); bands];
    Zip::from(&spec.power).and(&spec.radius).for_each(|&p, &r| per_band[band_index(r, bands)].push(p));
    let mut out = Vec::with_capacity(2 * bands + 2);
    if total > 0.0 {
        out.extend(energies.iter().map(|e| e / total));
    } else {
        out.extend(std::iter::repeat_n(0.0, bands));
    }
    out.extend(per_band.iter().map(|b| entropy_bits(b)));
    out.push(entropy_bits(spec.power.as_slice().expect("standard layout")));
    out.push(if total > 0.0 { spec.power[[0, 0]] / total } else { 0.0 });
    out
}

/// Share of non-DC Fourier power on even row frequencies and on even column
/// frequencies. Both are 1/2 for a flat spectrum; a copy shifted by half the
/// field of view pushes them towards 1.
pub fn parity_fractions(spec: &Spectrum) -> [f64; 2] {
    let (mut rows, mut cols, mut total) = (0.0, 0.0, 0.0);
    for ((r, c), &p) in spec.power.indexed_iter() {
        if r == 0 && c == 0 {
            continue;
        }
        total += p;
        if r % 2 == 0 {
            rows += p;
        }
        if c % 2 == 0 {
            cols += p;
        }
    }
    if total > 0.0 {
        [rows / total, cols / total]
    } else {
        [0.5, 0.5]
    }
}

/// Fourier then DCT summaries of the mask-windowed slice, then the Fourier
/// parity fractions.
pub fn transform_band_features(slice: &Array2<f64>, mask: &Array2<bool>, bands: usize) -> Result<Vec<f64>> {
    check_shape(slice, mask)?;
    let (h, w) = slice.dim();
    if h < 8 || w < 8 {
        return Err(AlqaError::Shape(format!("transform bands need at least 8×8, got {h}×{w}")));
    }
    let windowed = Zip::from(slice).and(mask).map_collect(|&v, &m| if m { v } else { 0.0 });
    let fourier = fourier_spectrum(&windowed);
    let mut out = spectrum_summary(&fourier, bands);
    out.extend(spectrum_summary(&cosine_spectrum(&windowed), bands));
    out.extend(parity_fractions(&fourier));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(h: usize, w: usize) -> Array2<bool> {
        Array2::from_elem((h, w), true)
    }

    #[test]
    fn constant_image_is_pure_dc() {
        let img = Array2::from_elem((16, 12), 0.8);
        let f = transform_band_features(&img, &full(16, 12), SPECTRAL_BANDS).unwrap();
        let per = 2 * SPECTRAL_BANDS + 2;
        for t in 0..2 {
            let s = &f[t * per..(t + 1) * per];
            assert!((s[per - 1] - 1.0).abs() < 1e-12);
            assert!(s[1..SPECTRAL_BANDS].iter().all(|e| e.abs() < 1e-12));
            assert!(s[per - 2].abs() < 1e-9);
        }
    }

    #[test]
    fn parity_of_half_field_ghost() {
        let (h, w) = (16, 10);
        let a = 0.4;
        let mut img = Array2::zeros((h, w));
        img[[3, 2]] = 1.0;
        img[[3 + h / 2, 2]] = a;
        let [rows, cols] = parity_fractions(&fourier_spectrum(&img));
        let half = (h * w / 2) as f64;
        let even = (1.0 + a) * (1.0 + a) * (half - 1.0);
        let odd = (1.0 - a) * (1.0 - a) * half;
        assert!((rows - even / (even + odd)).abs() < 1e-12);
        let column = (h / 2) as f64 * ((1.0 + a) * (1.0 + a) + (1.0 - a) * (1.0 - a));
        let dc = (1.0 + a) * (1.0 + a);
        let expected = ((w / 2) as f64 * column - dc) / (w as f64 * column - dc);
        assert!((cols - expected).abs() < 1e-12);
        assert_eq!(parity_fractions(&fourier_spectrum(&Array2::zeros((8, 8)))), [0.5, 0.5]);
    }

    #[test]
    fn parseval() {
        let img = Array2::from_shape_fn((10, 14), |(r, c)| ((r * 13 + c * 7) % 11) as f64 - 3.0);
        let direct: f64 = img.iter().map(|v| v * v).sum();
        for spec in [fourier_spectrum(&img), cosine_spectrum(&img)] {
            let total: f64 = band_energies(&spec, SPECTRAL_BANDS).iter().sum();
            assert!((total - direct).abs() <= 1e-6 * direct);
        }
    }

    #[test]
    fn delta_has_flat_spectrum() {
        let mut img = Array2::zeros((16, 16));
        img[[5, 9]] = 1.0;
        let f = transform_band_features(&img, &full(16, 16), SPECTRAL_BANDS).unwrap();
        let total_entropy = f[2 * SPECTRAL_BANDS];
        assert!((total_entropy - (256f64).log2()).abs() < 1e-9);
    }

    #[test]
    fn dct_matches_direct_sum() {
        let img = Array2::from_shape_fn((5, 6), |(r, c)| (r as f64 * 0.3).sin() + c as f64);
        let d = dct2(&img);
        let coef = |k: usize, n: usize| if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        for u in 0..5 {
            for v in 0..6 {
                let mut s = 0.0;
                for r in 0..5 {
                    for c in 0..6 {
                        s += img[[r, c]]
                            * (PI * (r as f64 + 0.5) * u as f64 / 5.0).cos()
                            * (PI * (c as f64 + 0.5) * v as f64 / 6.0).cos();
                    }
                }
                assert!((d[[u, v]] - coef(u, 5) * coef(v, 6) * s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn small_slice_rejected() {
        assert!(transform_band_features(&Array2::zeros((7, 9)), &full(7, 9), SPECTRAL_BANDS).is_err());
    }
}
