use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::LikertClass;
use crate::error::{AlqaError, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SignificanceReport {
    /// Indices of the features included in the grids.
    pub features: Vec<usize>,
    /// Features dropped for zero variance.
    pub excluded: Vec<usize>,
    /// Pearson correlation between included features.
    pub correlation: Vec<Vec<f64>>,
    /// Two-sided Welch t-test p-value for every feature pair.
    pub p_values: Vec<Vec<f64>>,
    pub fraction_p05: f64,
    pub fraction_p01: f64,
    pub notes: Vec<String>,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-sided p-value of Welch's unequal-variance t-test.
pub fn welch_p_value(a: &[f64], b: &[f64]) -> f64 {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let se2 = va / na + vb / nb;
    if se2 <= 0.0 {
        return if ma == mb { 1.0 } else { 0.0 };
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    match StudentsT::new(0.0, 1.0, df) {
        Ok(dist) => (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0),
        Err(_) => f64::NAN,
    }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 - 1.0);
    (cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0)
}

/// Correlation map and pairwise Welch tests over the columns of
/// `samples` (rows are samples, columns features).
pub fn feature_significance(samples: &[Vec<f64>], labels: &[LikertClass]) -> Result<SignificanceReport> {
    if samples.len() != labels.len() {
        return Err(AlqaError::DimensionMismatch {
            expected: labels.len(),
            actual: samples.len(),
        });
    }
    let mut per_class = std::collections::BTreeMap::<LikertClass, usize>::new();
    for l in labels {
        *per_class.entry(*l).or_default() += 1;
    }
    if per_class.values().filter(|n| **n >= 2).count() < 2 {
        return Err(AlqaError::Parameter(
            "need at least two classes with two samples each".into(),
        ));
    }
    let f = samples[0].len();
    if samples.iter().any(|s| s.len() != f) {
        return Err(AlqaError::Parameter("ragged feature rows".into()));
    }
    let columns: Vec<Vec<f64>> = (0..f).map(|j| samples.iter().map(|s| s[j]).collect()).collect();

    let mut features = Vec::new();
    let mut excluded = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        if mean_var(col).1 > 0.0 {
            features.push(j);
        } else {
            excluded.push(j);
        }
    }
    let mut notes = Vec::new();
    if !excluded.is_empty() {
        notes.push(format!("{} zero-variance features excluded", excluded.len()));
    }

    let m = features.len();
    let mut correlation = vec![vec![1.0; m]; m];
    let mut p_values = vec![vec![1.0; m]; m];
    let (mut p05, mut p01, mut pairs) = (0usize, 0usize, 0usize);
    for a in 0..m {
        for b in (a + 1)..m {
            let (ca, cb) = (&columns[features[a]], &columns[features[b]]);
            let r = pearson(ca, cb);
            let p = welch_p_value(ca, cb);
            correlation[a][b] = r;
            correlation[b][a] = r;
            p_values[a][b] = p;
            p_values[b][a] = p;
            pairs += 1;
            p05 += usize::from(p < 0.05);
            p01 += usize::from(p < 0.01);
        }
    }
    let denom = pairs.max(1) as f64;
    Ok(SignificanceReport {
        features,
        excluded,
        correlation,
        p_values,
        fraction_p05: p05 as f64 / denom,
        fraction_p01: p01 as f64 / denom,
        notes,
    })
}

/// Writes a grid as an 8-bit binary PGM, mapping [lo, hi] to [0, 255].
pub fn write_pgm(grid: &[Vec<f64>], lo: f64, hi: f64, path: &Path) -> Result<()> {
    let h = grid.len();
    let w = grid.first().map(Vec::len).unwrap_or(0);
    let mut out = std::fs::File::create(path)?;
    write!(out, "P5\n{w} {h}\n255\n")?;
    let bytes: Vec<u8> = grid
        .iter()
        .flatten()
        .map(|v| (((v - lo) / (hi - lo)).clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    out.write_all(&bytes)?;
    Ok(())
}

pub fn write_csv_grid(grid: &[Vec<f64>], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for row in grid {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn labels(n: usize) -> Vec<LikertClass> {
        (0..n).map(|i| LikertClass::new(1 + (i % 2) as u8).unwrap()).collect()
    }

    #[test]
    fn duplicate_feature_correlates_fully() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                let y: f64 = StandardNormal.sample(&mut rng);
                vec![x, x, y, 4.0]
            })
            .collect();
        let report = feature_significance(&rows, &labels(50)).unwrap();
        assert_eq!(report.excluded, vec![3]);
        assert!((report.correlation[0][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_features_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..10_000)
            .map(|_| vec![StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)])
            .collect();
        let report = feature_significance(&rows, &labels(10_000)).unwrap();
        assert!(report.correlation[0][1].abs() < 0.05);
    }

    #[test]
    fn null_t_tests_reject_at_nominal_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = 60;
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..f).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let report = feature_significance(&rows, &labels(40)).unwrap();
        // 1770 pairs drawn from one distribution; pairs share columns, so allow slack
        assert!((0.02..=0.09).contains(&report.fraction_p05), "{}", report.fraction_p05);
    }

    #[test]
    fn needs_two_classes() {
        let rows = vec![vec![1.0, 2.0]; 4];
        let one_class = vec![LikertClass::new(2).unwrap(); 4];
        assert!(feature_significance(&rows, &one_class).is_err());
    }

    #[test]
    fn welch_matches_known_value() {
        // scipy.stats.ttest_ind(a, b, equal_var=False).pvalue
        let a = [27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4];
        let b = [27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 20.5, 24.4];
        let p = welch_p_value(&a, &b);
        assert!((p - 0.021378001462866985).abs() < 1e-9, "p {p}");
    }
}
