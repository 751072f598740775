use std::f64::consts::PI;

use ndarray::{s, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::check_shape;
use crate::error::{AlqaError, Result};
use crate::fft::Fft2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaborBank {
    pub wavelengths: Vec<f64>,
    pub orientations_deg: Vec<f64>,
    /// Envelope width as a multiple of the wavelength.
    pub sigma_ratio: f64,
}

impl Default for GaborBank {
    fn default() -> Self {
        Self {
            wavelengths: vec![4.0, 8.0, 16.0, 32.0],
            orientations_deg: vec![0.0, 30.0, 60.0, 90.0, 120.0, 150.0],
            sigma_ratio: 0.56,
        }
    }
}

impl GaborBank {
    pub fn len(&self) -> usize {
        self.wavelengths.len() * self.orientations_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (wavelength, orientation) pairs, wavelength outermost.
    pub fn kernels(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.wavelengths
            .iter()
            .flat_map(move |&l| self.orientations_deg.iter().map(move |&t| (l, t)))
    }

    pub fn half_width(&self, wavelength: f64) -> usize {
        (2.0 * self.sigma_ratio * wavelength).ceil() as usize
    }

    pub fn plan(&self, height: usize, width: usize) -> Result<GaborPlan> {
        GaborPlan::new(self, height, width)
    }
}

/// Complex Gabor kernel with the DC component removed, normalized by the
/// envelope sum. The carrier runs along x cosθ + y sinθ (x = column).
pub fn gabor_kernel(wavelength: f64, orientation_deg: f64, sigma: f64, half: usize) -> Array2<Complex64> {
    let n = 2 * half + 1;
    let theta = orientation_deg.to_radians();
    let omega = 2.0 * PI / wavelength;
    let mut envelope = Array2::zeros((n, n));
    let mut carrier = Array2::from_elem((n, n), Complex64::new(0.0, 0.0));
    for r in 0..n {
        for c in 0..n {
            let y = r as f64 - half as f64;
            let x = c as f64 - half as f64;
            let xr = x * theta.cos() + y * theta.sin();
            envelope[[r, c]] = (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
            carrier[[r, c]] = Complex64::from_polar(1.0, omega * xr);
        }
    }
    let env_sum: f64 = envelope.sum();
    let dc: Complex64 = envelope.iter().zip(carrier.iter()).map(|(e, z)| z * e).sum::<Complex64>() / env_sum;
    Array2::from_shape_fn((n, n), |(r, c)| envelope[[r, c]] * (carrier[[r, c]] - dc) / env_sum)
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let i = if i < 0 { -i } else { i };
    (if i >= n { 2 * n - 2 - i } else { i }) as usize
}

/// Kernel spectra for one slice shape; reusable across slices.
pub struct GaborPlan {
    shape: (usize, usize),
    pad: usize,
    fft: Fft2,
    spectra: Vec<Array2<Complex64>>,
}

impl GaborPlan {
    pub fn new(bank: &GaborBank, height: usize, width: usize) -> Result<Self> {
        if bank.is_empty() || bank.sigma_ratio <= 0.0 || bank.wavelengths.iter().any(|l| !(*l > 0.0)) {
            return Err(AlqaError::Parameter("Gabor bank must be non-empty with positive wavelengths".into()));
        }
        let pad = bank.wavelengths.iter().map(|&l| bank.half_width(l)).max().unwrap_or(0);
        if 2 * pad + 1 > height.min(width) {
            return Err(AlqaError::Parameter(format!(
                "Gabor kernel of size {} exceeds the {height}×{width} image",
                2 * pad + 1
            )));
        }
        let (ph, pw) = (height + 2 * pad, width + 2 * pad);
        let fft = Fft2::new(ph, pw);
        let mut spectra = Vec::with_capacity(bank.len());
        for (l, t) in bank.kernels() {
            let half = bank.half_width(l);
            let k = gabor_kernel(l, t, bank.sigma_ratio * l, half);
            let mut wrapped = Array2::from_elem((ph, pw), Complex64::new(0.0, 0.0));
            for ((r, c), v) in k.indexed_iter() {
                let dr = (r as isize - half as isize).rem_euclid(ph as isize) as usize;
                let dc = (c as isize - half as isize).rem_euclid(pw as isize) as usize;
                wrapped[[dr, dc]] = *v;
            }
            fft.forward(&mut wrapped);
            spectra.push(wrapped);
        }
        Ok(Self {
            shape: (height, width),
            pad,
            fft,
            spectra,
        })
    }

    /// Complex responses (one per kernel) of the reflect-padded slice.
    pub fn responses(&self, slice: &Array2<f64>) -> Result<Vec<Array2<Complex64>>> {
        if slice.dim() != self.shape {
            return Err(AlqaError::Shape(format!("plan built for {:?}, slice is {:?}", self.shape, slice.dim())));
        }
        let (h, w) = self.shape;
        let p = self.pad as isize;
        let (ph, pw) = self.fft.shape();
        let mut padded = Array2::from_shape_fn((ph, pw), |(r, c)| {
            Complex64::new(slice[[reflect(r as isize - p, h), reflect(c as isize - p, w)]], 0.0)
        });
        self.fft.forward(&mut padded);
        Ok(self
            .spectra
            .iter()
            .map(|k| {
                let mut prod = &padded * k;
                self.fft.inverse(&mut prod);
                prod.slice(s![self.pad..self.pad + h, self.pad..self.pad + w]).to_owned()
            })
            .collect())
    }

    /// Per kernel: mean squared magnitude and mean magnitude over the mask.
    pub fn features(&self, slice: &Array2<f64>, mask: &Array2<bool>) -> Result<Vec<f64>> {
        check_shape(slice, mask)?;
        let n = mask.iter().filter(|m| **m).count();
        if n == 0 {
            return Err(AlqaError::EmptyRegion("Gabor: empty mask".into()));
        }
        let mut out = Vec::with_capacity(2 * self.spectra.len());
        for resp in self.responses(slice)? {
            let (mut energy, mut magnitude) = (0.0, 0.0);
            for (z, &m) in resp.iter().zip(mask.iter()) {
                if m {
                    energy += z.norm_sqr();
                    magnitude += z.norm();
                }
            }
            out.push(energy / n as f64);
            out.push(magnitude / n as f64);
        }
        Ok(out)
    }
}

pub fn gabor_features(slice: &Array2<f64>, mask: &Array2<bool>, bank: &GaborBank) -> Result<Vec<f64>> {
    let (h, w) = slice.dim();
    bank.plan(h, w)?.features(slice, mask)
}
