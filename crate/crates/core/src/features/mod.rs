//! Per-slice feature extraction over the foreground region.
//!
//! Every extractor is a pure function of (slice, mask). [`FeatureManifest`]
//! fixes the order and names of all outputs, and [`FeatureExtractor`]
//! concatenates them into a [`FeatureVector`] bound to the manifest checksum.

mod fractal;
mod gabor;
mod glcm;
mod gradient;
mod histogram;
mod lbp;
mod manifest;
mod runlength;
mod spectral;
mod table;

use ndarray::Array2;

use crate::error::{AlqaError, Result};

pub use fractal::{
    box_count, box_counting_dimension, fractal_features, lacunarity, otsu_threshold, BOX_SIZES, FRACTAL_NAMES,
    LACUNARITY_SIZES,
};
pub use gabor::{gabor_features, gabor_kernel, GaborBank, GaborPlan};
pub use glcm::{glcm_counts, glcm_features, glcm_offset, haralick, symmetric_normalized, GLCM_STATS};
pub use gradient::{gradient_features, GRADIENT_NAMES};
pub use histogram::{histogram_features, lower_percentile, HISTOGRAM_NAMES};
pub use lbp::{lbp_code, lbp_features, neighbor_offsets, uniform_map, LBP_UNIFORM_BINS};
pub use manifest::{
    assemble_feature_vector, Extractor, FeatureExtractor, FeatureGroup, FeatureManifest, FeatureParams,
    FeatureVector, ManifestEntry, SliceRef,
};
pub use runlength::{run_length_features, run_length_matrix, run_length_stats, RUN_LENGTH_STATS};
pub use spectral::{
    band_energies, cosine_spectrum, dct2, fourier_spectrum, spectrum_summary, transform_band_features, Spectrum,
    SPECTRAL_BANDS,
};
pub use table::{load_manifest, read_feature_csv, save_manifest, write_feature_csv, FeatureTable};

pub(crate) fn check_shape(slice: &Array2<f64>, mask: &Array2<bool>) -> Result<()> {
    if slice.dim() != mask.dim() {
        return Err(AlqaError::Shape(format!("slice {:?} vs mask {:?}", slice.dim(), mask.dim())));
    }
    Ok(())
}

pub(crate) fn foreground_values(slice: &Array2<f64>, mask: &Array2<bool>) -> Result<Vec<f64>> {
    check_shape(slice, mask)?;
    let v: Vec<f64> = slice.iter().zip(mask.iter()).filter(|(_, m)| **m).map(|(v, _)| *v).collect();
    if v.is_empty() {
        return Err(AlqaError::EmptyRegion("empty mask".into()));
    }
    Ok(v)
}

/// Counts of `values` in `bins` equal-width bins over [lo, hi]; everything
/// lands in bin 0 when hi ≤ lo.
pub(crate) fn histogram_counts(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0; bins];
    let width = hi - lo;
    for &v in values {
        let b = if width > 0.0 {
            (((v - lo) / width) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize
        } else {
            0
        };
        counts[b] += 1.0;
    }
    counts
}

/// Shannon entropy in bits of non-negative weights (normalized internally).
pub(crate) fn entropy_bits(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let h = -weights
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| {
            let p = w / total;
            p * p.log2()
        })
        .sum::<f64>();
    h.max(0.0)
}

/// Equal-width quantization of the foreground range into `levels` gray
/// levels; background pixels get level 0 and a constant foreground maps to 0.
pub fn quantize(slice: &Array2<f64>, mask: &Array2<bool>, levels: usize) -> Array2<usize> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (v, m) in slice.iter().zip(mask.iter()) {
        if *m {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    let width = hi - lo;
    Array2::from_shape_fn(slice.dim(), |(r, c)| {
        if !mask[[r, c]] || !(width > 0.0) {
            return 0;
        }
        (((slice[[r, c]] - lo) / width * levels as f64).floor() as usize).min(levels - 1)
    })
}
