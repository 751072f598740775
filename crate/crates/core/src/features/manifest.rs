use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::*;
use crate::error::{AlqaError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Intensity,
    Transformation,
    Geometrical,
    Region,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extractor {
    Gradient,
    Histogram,
    TransformBands,
    Gabor,
    Glcm,
    RunLength,
    Lbp,
    Fractal,
}

impl Extractor {
    pub const ALL: [Extractor; 8] = [
        Extractor::Gradient,
        Extractor::Histogram,
        Extractor::TransformBands,
        Extractor::Gabor,
        Extractor::Glcm,
        Extractor::RunLength,
        Extractor::Lbp,
        Extractor::Fractal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Extractor::Gradient => "gradient",
            Extractor::Histogram => "histogram",
            Extractor::TransformBands => "transform_bands",
            Extractor::Gabor => "gabor",
            Extractor::Glcm => "glcm",
            Extractor::RunLength => "run_length",
            Extractor::Lbp => "lbp",
            Extractor::Fractal => "fractal",
        }
    }

    pub fn group(self) -> FeatureGroup {
        match self {
            Extractor::Gradient | Extractor::Histogram => FeatureGroup::Intensity,
            Extractor::TransformBands | Extractor::Gabor => FeatureGroup::Transformation,
            Extractor::Glcm | Extractor::RunLength | Extractor::Fractal => FeatureGroup::Geometrical,
            Extractor::Lbp => FeatureGroup::Region,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureParams {
    pub histogram_bins: usize,
    pub spectral_bands: usize,
    pub gabor: GaborBank,
    pub glcm_levels: usize,
    pub glcm_distances: Vec<usize>,
    pub glcm_angles: Vec<u32>,
    pub run_length_levels: usize,
    pub lbp_radius: f64,
    pub lbp_neighbors: usize,
    /// Regions with fewer foreground pixels yield all-zero vectors.
    pub min_region: usize,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            histogram_bins: 32,
            spectral_bands: SPECTRAL_BANDS,
            gabor: GaborBank::default(),
            glcm_levels: 8,
            glcm_distances: vec![1],
            glcm_angles: vec![0, 45, 90, 135],
            run_length_levels: 8,
            lbp_radius: 1.0,
            lbp_neighbors: 8,
            min_region: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub group: FeatureGroup,
    pub extractor: Extractor,
    pub name: String,
    pub fingerprint: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub params: FeatureParams,
    pub entries: Vec<ManifestEntry>,
}

impl Default for FeatureManifest {
    fn default() -> Self {
        Self::new(FeatureParams::default())
    }
}

impl FeatureManifest {
    pub fn new(params: FeatureParams) -> Self {
        let mut entries = Vec::new();
        for ex in Extractor::ALL {
            let fingerprint = fingerprint(ex, &params);
            for name in feature_names(ex, &params) {
                entries.push(ManifestEntry {
                    group: ex.group(),
                    extractor: ex,
                    name: format!("{}.{name}", ex.name()),
                    fingerprint: fingerprint.clone(),
                });
            }
        }
        Self { params, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    /// Number of entries per extractor, in manifest order.
    pub fn counts(&self) -> Vec<(Extractor, usize)> {
        let mut out: Vec<(Extractor, usize)> = Vec::new();
        for e in &self.entries {
            match out.last_mut() {
                Some((ex, n)) if *ex == e.extractor => *n += 1,
                _ => out.push((e.extractor, 1)),
            }
        }
        out
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn checksum(&self) -> String {
        let json = serde_json::to_vec(self).expect("manifest serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for e in &self.entries {
            if !seen.insert(&e.name) {
                return Err(AlqaError::ManifestMismatch(format!("duplicate feature name {}", e.name)));
            }
        }
        let rebuilt = FeatureManifest::new(self.params.clone());
        if rebuilt.entries != self.entries {
            return Err(AlqaError::ManifestMismatch("entries do not match the parameters".into()));
        }
        Ok(())
    }
}

fn fingerprint(ex: Extractor, p: &FeatureParams) -> String {
    match ex {
        Extractor::Gradient => "central_diff".into(),
        Extractor::Histogram => format!("bins={}", p.histogram_bins),
        Extractor::TransformBands => format!("bands={}", p.spectral_bands),
        Extractor::Gabor => format!(
            "lambda={:?};theta={:?};sigma_ratio={}",
            p.gabor.wavelengths, p.gabor.orientations_deg, p.gabor.sigma_ratio
        ),
        Extractor::Glcm => format!("levels={};d={:?};angles={:?}", p.glcm_levels, p.glcm_distances, p.glcm_angles),
        Extractor::RunLength => format!("levels={};dirs=[0,90]", p.run_length_levels),
        Extractor::Lbp => format!("radius={};neighbors={}", p.lbp_radius, p.lbp_neighbors),
        Extractor::Fractal => format!("boxes={BOX_SIZES:?};lacunarity={LACUNARITY_SIZES:?}"),
    }
}

fn feature_names(ex: Extractor, p: &FeatureParams) -> Vec<String> {
    match ex {
        Extractor::Gradient => GRADIENT_NAMES.iter().map(|s| s.to_string()).collect(),
        Extractor::Histogram => HISTOGRAM_NAMES.iter().map(|s| s.to_string()).collect(),
        Extractor::TransformBands => {
            let mut names = Vec::new();
            for t in ["fft", "dct"] {
                names.extend((0..p.spectral_bands).map(|b| format!("{t}_band{b}_energy")));
                names.extend((0..p.spectral_bands).map(|b| format!("{t}_band{b}_entropy")));
                names.push(format!("{t}_entropy"));
                names.push(format!("{t}_dc_fraction"));
            }
            names.push("fft_even_row_fraction".into());
            names.push("fft_even_col_fraction".into());
            names
        }
        Extractor::Gabor => p
            .gabor
            .kernels()
            .flat_map(|(l, t)| [format!("l{l}_t{t}_energy"), format!("l{l}_t{t}_magnitude")])
            .collect(),
        Extractor::Glcm => p
            .glcm_distances
            .iter()
            .flat_map(|d| p.glcm_angles.iter().map(move |a| (*d, *a)))
            .flat_map(|(d, a)| GLCM_STATS.iter().map(move |s| format!("d{d}_a{a}_{s}")))
            .collect(),
        Extractor::RunLength => [0, 90]
            .iter()
            .flat_map(|a| RUN_LENGTH_STATS.iter().map(move |s| format!("a{a}_{s}")))
            .collect(),
        Extractor::Lbp => (0..256)
            .map(|c| format!("code{c}"))
            .chain((0..LBP_UNIFORM_BINS).map(|b| format!("uniform{b}")))
            .collect(),
        Extractor::Fractal => FRACTAL_NAMES.iter().map(|s| s.to_string()).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SliceRef {
    pub volume_id: String,
    pub slice_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub manifest_hash: String,
    pub source: SliceRef,
    /// Non-finite values replaced by 0 plus degenerate extractor outcomes.
    pub degeneracies: usize,
}

/// Holds a manifest and per-shape Gabor plans.
pub struct FeatureExtractor {
    manifest: FeatureManifest,
    checksum: String,
    counts: Vec<(Extractor, usize)>,
    plans: Mutex<HashMap<(usize, usize), Arc<GaborPlan>>>,
}

impl FeatureExtractor {
    pub fn new(manifest: FeatureManifest) -> Result<Self> {
        manifest.validate()?;
        Ok(Self {
            checksum: manifest.checksum(),
            counts: manifest.counts(),
            manifest,
            plans: Mutex::new(HashMap::new()),
        })
    }

    pub fn manifest(&self) -> &FeatureManifest {
        &self.manifest
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    fn plan(&self, shape: (usize, usize)) -> Result<Arc<GaborPlan>> {
        let mut plans = self.plans.lock().expect("plan cache poisoned");
        if let Some(p) = plans.get(&shape) {
            return Ok(Arc::clone(p));
        }
        let plan = Arc::new(self.manifest.params.gabor.plan(shape.0, shape.1)?);
        plans.insert(shape, Arc::clone(&plan));
        Ok(plan)
    }

    fn run(&self, ex: Extractor, slice: &Array2<f64>, mask: &Array2<bool>) -> Result<Vec<f64>> {
        let p = &self.manifest.params;
        match ex {
            Extractor::Gradient => gradient_features(slice, mask),
            Extractor::Histogram => histogram_features(slice, mask, p.histogram_bins),
            Extractor::TransformBands => transform_band_features(slice, mask, p.spectral_bands),
            Extractor::Gabor => self.plan(slice.dim())?.features(slice, mask),
            Extractor::Glcm => glcm_features(slice, mask, p.glcm_levels, &p.glcm_distances, &p.glcm_angles),
            Extractor::RunLength => run_length_features(slice, mask, p.run_length_levels),
            Extractor::Lbp => lbp_features(slice, mask, p.lbp_radius, p.lbp_neighbors),
            Extractor::Fractal => fractal_features(slice, mask),
        }
    }

    /// Runs every extractor in manifest order. Empty-region outcomes become
    /// zeros and count as degeneracies; a length mismatch is an error.
    pub fn extract(&self, slice: &Array2<f64>, mask: &Array2<bool>, source: SliceRef) -> Result<FeatureVector> {
        check_shape(slice, mask)?;
        let mut values = Vec::with_capacity(self.manifest.len());
        let mut degeneracies = 0;
        let region = mask.iter().filter(|m| **m).count();
        for &(ex, expected) in &self.counts {
            if region < self.manifest.params.min_region {
                values.extend(std::iter::repeat_n(0.0, expected));
                degeneracies += 1;
                continue;
            }
            let out = match self.run(ex, slice, mask) {
                Ok(v) => v,
                Err(AlqaError::EmptyRegion(_)) => {
                    degeneracies += 1;
                    vec![0.0; expected]
                }
                Err(e) => return Err(e),
            };
            if out.len() != expected {
                return Err(AlqaError::ManifestMismatch(format!(
                    "{} produced {} values, manifest expects {expected}",
                    ex.name(),
                    out.len()
                )));
            }
            if ex == Extractor::Fractal && out[FRACTAL_NAMES.len() - 1] != 0.0 {
                degeneracies += 1;
            }
            values.extend(out);
        }
        for v in values.iter_mut() {
            if !v.is_finite() {
                *v = 0.0;
                degeneracies += 1;
            }
        }
        Ok(FeatureVector {
            values,
            manifest_hash: self.checksum.clone(),
            source,
            degeneracies,
        })
    }
}

/// One-shot form of [`FeatureExtractor::extract`].
pub fn assemble_feature_vector(slice: &Array2<f64>, mask: &Array2<bool>, manifest: &FeatureManifest, source: SliceRef) -> Result<FeatureVector> {
    FeatureExtractor::new(manifest.clone())?.extract(slice, mask, source)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src() -> SliceRef {
        SliceRef {
            volume_id: "v".into(),
            slice_index: 0,
        }
    }

    fn textured(h: usize, w: usize) -> (Array2<f64>, Array2<bool>) {
        let img = Array2::from_shape_fn((h, w), |(r, c)| {
            let d = ((r as f64 - h as f64 / 2.0).powi(2) + (c as f64 - w as f64 / 2.0).powi(2)).sqrt();
            if d < 28.0 {
                0.8 + 0.2 * ((r as f64 * 0.7).sin() * (c as f64 * 0.4).cos())
            } else {
                0.02 * ((r * 7 + c * 3) % 5) as f64
            }
        });
        let mask = img.mapv(|v| v > 0.3);
        (img, mask)
    }

    #[test]
    fn manifest_shape() {
        let m = FeatureManifest::default();
        assert_eq!(m.len(), 11 + 10 + 38 + 48 + 20 + 10 + 315 + 6);
        assert_eq!(m.counts().iter().map(|c| c.1).sum::<usize>(), m.len());
        m.validate().unwrap();
        assert_eq!(m.checksum(), FeatureManifest::default().checksum());
    }

    #[test]
    fn deterministic_and_complete() {
        let (img, mask) = textured(80, 80);
        let ex = FeatureExtractor::new(FeatureManifest::default()).unwrap();
        let a = ex.extract(&img, &mask, src()).unwrap();
        let b = ex.extract(&img, &mask, src()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values.len(), ex.manifest().len());
        assert!(a.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn degenerate_fractal_region_is_sanitized() {
        let img = Array2::from_shape_fn((80, 80), |(r, c)| if (20..60).contains(&r) && (20..60).contains(&c) { 1.0 } else { 0.0 });
        let mask = img.mapv(|v| v > 0.5);
        let v = assemble_feature_vector(&img, &mask, &FeatureManifest::default(), src()).unwrap();
        assert!(v.values.iter().all(|x| x.is_finite()));
        assert!(v.degeneracies >= 1);
    }

    #[test]
    fn tiny_region_yields_zeros() {
        let img = Array2::from_elem((80, 80), 0.5);
        let mask = Array2::from_shape_fn((80, 80), |(r, c)| r == 40 && c < 5);
        let v = assemble_feature_vector(&img, &mask, &FeatureManifest::default(), src()).unwrap();
        assert!(v.values.iter().all(|x| *x == 0.0));
        assert_eq!(v.degeneracies, Extractor::ALL.len());
    }

    #[test]
    fn tampered_manifest_rejected() {
        let mut m = FeatureManifest::default();
        m.entries.pop();
        assert!(FeatureExtractor::new(m).is_err());
    }

    #[test]
    fn translation_invariance() {
        let (h, w) = (80, 80);
        let disk = |dy: usize, dx: usize| {
            let img = Array2::from_shape_fn((h, w), |(r, c)| {
                let (y, x) = (r as f64 - 30.0 - dy as f64, c as f64 - 30.0 - dx as f64);
                if y * y + x * x < 15.0 * 15.0 {
                    0.6 + 0.3 * ((y * 0.9).sin() * (x * 0.5).cos())
                } else {
                    0.0
                }
            });
            let mask = img.mapv(|v| v > 0.0);
            (img, mask)
        };
        let (a_img, a_mask) = disk(0, 0);
        let (b_img, b_mask) = disk(3, 5);
        let p = FeatureParams::default();
        let pairs = [
            (histogram_features(&a_img, &a_mask, 32).unwrap(), histogram_features(&b_img, &b_mask, 32).unwrap()),
            (
                glcm_features(&a_img, &a_mask, 8, &p.glcm_distances, &p.glcm_angles).unwrap(),
                glcm_features(&b_img, &b_mask, 8, &p.glcm_distances, &p.glcm_angles).unwrap(),
            ),
            (run_length_features(&a_img, &a_mask, 8).unwrap(), run_length_features(&b_img, &b_mask, 8).unwrap()),
            (lbp_features(&a_img, &a_mask, 1.0, 8).unwrap(), lbp_features(&b_img, &b_mask, 1.0, 8).unwrap()),
        ];
        for (a, b) in pairs {
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
        }
    }
}
