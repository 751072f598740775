//! Feature standardization and principal component projection.

use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AlqaError, Result};

pub const DEFAULT_R_SVM: usize = 45;
pub const DEFAULT_R_MLP: usize = 47;
const MODEL_FORMAT_VERSION: u32 = 1;

/// Column-wise z-scoring with population statistics of the fitting set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub zero_variance: Vec<bool>,
}

impl Standardizer {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(AlqaError::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .enumerate()
            .map(|(j, v)| if self.zero_variance[j] { 0.0 } else { (v - self.means[j]) / self.stds[j] })
            .collect())
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

fn check_rows(rows: &[Vec<f64>]) -> Result<usize> {
    let f = rows.first().map(Vec::len).unwrap_or(0);
    for r in rows {
        if r.len() != f {
            return Err(AlqaError::DimensionMismatch { expected: f, actual: r.len() });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(AlqaError::NonFinite("feature row".into()));
        }
    }
    Ok(f)
}

pub fn fit_standardizer(rows: &[Vec<f64>]) -> Result<Standardizer> {
    if rows.len() < 2 {
        return Err(AlqaError::Training(format!("standardizer needs at least 2 rows, got {}", rows.len())));
    }
    let f = check_rows(rows)?;
    let n = rows.len() as f64;
    let mut means = vec![0.0; f];
    for r in rows {
        for (m, v) in means.iter_mut().zip(r) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut stds = vec![0.0; f];
    for r in rows {
        for j in 0..f {
            stds[j] += (r[j] - means[j]).powi(2);
        }
    }
    let mut zero_variance = vec![false; f];
    for j in 0..f {
        stds[j] = (stds[j] / n).sqrt();
        // relative floor so columns that are constant up to rounding count as constant
        if !(stds[j] > 1e-12 * means[j].abs().max(1.0)) {
            zero_variance[j] = true;
            stds[j] = 0.0;
        }
    }
    Ok(Standardizer { means, stds, zero_variance })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// Mean subtracted before projection (≈ 0 for standardized input).
    pub center: Vec<f64>,
    /// R rows of length F.
    pub components: Vec<Vec<f64>>,
    /// Sample-covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn r(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(AlqaError::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(x).zip(&self.center).map(|((a, v), m)| a * (v - m)).sum())
            .collect())
    }

    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for v in self.center.iter().chain(self.components.iter().flatten()).chain(&self.eigenvalues) {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Top-R principal components of the sample covariance via the SVD of the
/// centered data matrix. Each component's largest-magnitude entry is positive.
pub fn fit_pca(rows: &[Vec<f64>], r: usize) -> Result<PcaModel> {
    let f = check_rows(rows)?;
    let n = rows.len();
    if n < 2 || r < 1 || r > f.min(n - 1) {
        return Err(AlqaError::Parameter(format!("R = {r} outside 1..={} for {n} rows of {f} features", f.min(n.saturating_sub(1)))));
    }
    let mut center = vec![0.0; f];
    for row in rows {
        for (c, v) in center.iter_mut().zip(row) {
            *c += v;
        }
    }
    center.iter_mut().for_each(|c| *c /= n as f64);
    let data = DMatrix::from_fn(n, f, |i, j| rows[i][j] - center[j]);
    let svd = data.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| AlqaError::Training("SVD did not return right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

    let denom = (n - 1) as f64;
    let all: Vec<f64> = order.iter().map(|&k| svd.singular_values[k].powi(2) / denom).collect();
    let total: f64 = all.iter().sum();
    let mut components = Vec::with_capacity(r);
    for &k in order.iter().take(r) {
        let mut c: Vec<f64> = v_t.row(k).iter().copied().collect();
        let lead = c.iter().enumerate().fold(0, |best, (j, v)| if v.abs() > c[best].abs() { j } else { best });
        if c[lead] < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(c);
    }
    let eigenvalues: Vec<f64> = all[..r].to_vec();
    let explained_variance_ratio = eigenvalues.iter().map(|e| if total > 0.0 { e / total } else { 0.0 }).collect();
    Ok(PcaModel {
        center,
        components,
        eigenvalues,
        explained_variance_ratio,
    })
}

/// Standardizer plus PCA, fitted together on the same rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Reducer {
    pub standardizer: Standardizer,
    pub pca: PcaModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedVector {
    pub values: Vec<f64>,
    pub model_hash: String,
}

impl Reducer {
    pub fn fit(rows: &[Vec<f64>], r: usize) -> Result<Self> {
        let standardizer = fit_standardizer(rows)?;
        let std_rows = standardizer.apply_all(rows)?;
        let pca = fit_pca(&std_rows, r)?;
        Ok(Self { standardizer, pca })
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.pca.project(&self.standardizer.apply(x)?)
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }

    pub fn reduce(&self, x: &[f64]) -> Result<ReducedVector> {
        Ok(ReducedVector {
            values: self.transform(x)?,
            model_hash: self.pca.checksum(),
        })
    }

    /// One JSON header line followed by the R×F component matrix as
    /// little-endian f64, row-major.
    pub fn save(&self, path: &Path) -> Result<()> {
        let header = ModelHeader {
            format_version: MODEL_FORMAT_VERSION,
            n_features: self.pca.dim(),
            r: self.pca.r(),
            standardizer: self.standardizer.clone(),
            center: self.pca.center.clone(),
            eigenvalues: self.pca.eigenvalues.clone(),
            explained_variance_ratio: self.pca.explained_variance_ratio.clone(),
            checksum: self.pca.checksum(),
        };
        let mut bytes = serde_json::to_vec(&header)?;
        bytes.push(b'\n');
        for v in self.pca.components.iter().flatten() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(AlqaError::NotFound(path.to_path_buf()));
        }
        let corrupt = |reason: &str| AlqaError::Corrupt {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut reader = BufReader::new(fs::File::open(path)?);
        let mut line = Vec::new();
        reader.read_until(b'\n', &mut line)?;
        let header: ModelHeader = serde_json::from_slice(&line).map_err(|_| corrupt("unreadable header"))?;
        if header.format_version != MODEL_FORMAT_VERSION {
            return Err(AlqaError::VersionMismatch {
                expected: MODEL_FORMAT_VERSION,
                found: header.format_version,
            });
        }
        let mut raw = Vec::new();
        reader.read_to_end(&mut raw)?;
        if raw.len() != header.r * header.n_features * 8 {
            return Err(corrupt("component matrix has the wrong size"));
        }
        let flat: Vec<f64> = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
        let pca = PcaModel {
            center: header.center,
            components: flat.chunks(header.n_features.max(1)).map(<[f64]>::to_vec).collect(),
            eigenvalues: header.eigenvalues,
            explained_variance_ratio: header.explained_variance_ratio,
        };
        if pca.checksum() != header.checksum {
            return Err(corrupt("checksum mismatch"));
        }
        Ok(Self {
            standardizer: header.standardizer,
            pca,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    format_version: u32,
    n_features: usize,
    r: usize,
    standardizer: Standardizer,
    center: Vec<f64>,
    eigenvalues: Vec<f64>,
    explained_variance_ratio: Vec<f64>,
    checksum: String,
}
