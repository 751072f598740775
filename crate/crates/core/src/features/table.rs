use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureManifest, FeatureVector, SliceRef};
use crate::error::{AlqaError, Result};

/// Feature vectors of many slices sharing one manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub manifest: FeatureManifest,
    pub rows: Vec<FeatureVector>,
}

impl FeatureTable {
    pub fn new(manifest: FeatureManifest) -> Self {
        Self { manifest, rows: Vec::new() }
    }

    pub fn push(&mut self, row: FeatureVector) -> Result<()> {
        let checksum = self.manifest.checksum();
        if row.manifest_hash != checksum || row.values.len() != self.manifest.len() {
            return Err(AlqaError::ManifestMismatch(format!(
                "row for {:?} does not belong to this manifest",
                row.source
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows of one volume, in slice order.
    pub fn rows_of<'a>(&'a self, volume_id: &'a str) -> impl Iterator<Item = &'a FeatureVector> + 'a {
        self.rows.iter().filter(move |r| r.source.volume_id == volume_id)
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    checksum: String,
    manifest: FeatureManifest,
}

pub fn save_manifest(manifest: &FeatureManifest, path: &Path) -> Result<()> {
    let file = ManifestFile {
        checksum: manifest.checksum(),
        manifest: manifest.clone(),
    };
    fs::write(path, serde_json::to_vec_pretty(&file)?)?;
    Ok(())
}

pub fn load_manifest(path: &Path) -> Result<FeatureManifest> {
    if !path.exists() {
        return Err(AlqaError::NotFound(path.to_path_buf()));
    }
    let file: ManifestFile = serde_json::from_slice(&fs::read(path)?)?;
    if file.manifest.checksum() != file.checksum {
        return Err(AlqaError::Corrupt {
            path: path.to_path_buf(),
            reason: "manifest checksum mismatch".into(),
        });
    }
    file.manifest.validate()?;
    Ok(file.manifest)
}

/// CSV with columns volume_id, slice_index, then one column per manifest
/// feature. Values use the shortest representation that round-trips.
pub fn write_feature_csv(table: &FeatureTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["volume_id".to_string(), "slice_index".to_string()];
    header.extend(table.manifest.names());
    w.write_record(&header).map_err(csv_err)?;
    for row in &table.rows {
        let mut rec = vec![row.source.volume_id.clone(), row.source.slice_index.to_string()];
        rec.extend(row.values.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_feature_csv(path: &Path, manifest: &FeatureManifest) -> Result<FeatureTable> {
    if !path.exists() {
        return Err(AlqaError::NotFound(path.to_path_buf()));
    }
    let corrupt = |reason: String| AlqaError::Corrupt {
        path: path.to_path_buf(),
        reason,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let names = manifest.names();
    if header.len() != names.len() + 2 || header[2..] != names[..] {
        return Err(AlqaError::ManifestMismatch(format!("{} columns do not match the manifest", path.display())));
    }
    let checksum = manifest.checksum();
    let mut table = FeatureTable::new(manifest.clone());
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let slice_index = rec[1].parse().map_err(|e| corrupt(format!("slice index: {e}")))?;
        let values = rec
            .iter()
            .skip(2)
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| corrupt(format!("value: {e}")))?;
        table.rows.push(FeatureVector {
            values,
            manifest_hash: checksum.clone(),
            source: SliceRef {
                volume_id: rec[0].to_string(),
                slice_index,
            },
            degeneracies: 0,
        });
    }
    Ok(table)
}

fn csv_err(e: csv::Error) -> AlqaError {
    AlqaError::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let manifest = FeatureManifest::default();
        let mut table = FeatureTable::new(manifest.clone());
        for i in 0..3 {
            table
                .push(FeatureVector {
                    values: (0..manifest.len()).map(|k| (k as f64 * 0.1 + i as f64).sqrt() / 3.0).collect(),
                    manifest_hash: manifest.checksum(),
                    source: SliceRef {
                        volume_id: format!("v{i}"),
                        slice_index: i,
                    },
                    degeneracies: 0,
                })
                .unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("f.csv");
        let man_path = dir.path().join("manifest.json");
        write_feature_csv(&table, &csv_path).unwrap();
        save_manifest(&manifest, &man_path).unwrap();
        let loaded_manifest = load_manifest(&man_path).unwrap();
        let loaded = read_feature_csv(&csv_path, &loaded_manifest).unwrap();
        assert_eq!(loaded, table);
    }

    #[test]
    fn foreign_row_rejected() {
        let mut table = FeatureTable::new(FeatureManifest::default());
        let row = FeatureVector {
            values: vec![0.0; 3],
            manifest_hash: "x".into(),
            source: SliceRef {
                volume_id: "v".into(),
                slice_index: 0,
            },
            degeneracies: 0,
        };
        assert!(table.push(row).is_err());
    }
}
