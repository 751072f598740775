//! On-disk layout:
//!
//! ```text
//! db.json                 pools, splits, labels, reference labels
//! volumes/<id>.f32        raw little-endian f32, C order (depth, height, width)
//! volumes/<id>.json       shape, spacing, ids, provenance
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use super::{ImageVolume, LikertClass, PhantomSpec, Splits, TestCaseDatabase};
use crate::error::{AlqaError, Result};

pub const DB_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct DbIndex {
    format_version: u32,
    volume_ids: Vec<String>,
    unlabeled: BTreeSet<String>,
    labeled: BTreeMap<String, LikertClass>,
    splits: Splits,
    reference: BTreeMap<String, LikertClass>,
}

#[derive(Serialize, Deserialize)]
struct VolumeMeta {
    format_version: u32,
    id: String,
    patient_id: String,
    shape: (usize, usize, usize),
    spacing: (f64, f64, f64),
    provenance: PhantomSpec,
}

pub fn volume_dir(root: &Path) -> PathBuf {
    root.join("volumes")
}

/// Writes `contents` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn save_database(db: &TestCaseDatabase, root: &Path) -> Result<()> {
    let vdir = volume_dir(root);
    fs::create_dir_all(&vdir)?;
    for v in db.volumes.values() {
        let meta = VolumeMeta {
            format_version: DB_FORMAT_VERSION,
            id: v.id.clone(),
            patient_id: v.patient_id.clone(),
            shape: v.voxels.dim(),
            spacing: v.spacing,
            provenance: v.provenance.clone(),
        };
        let mut raw = Vec::with_capacity(v.voxels.len() * 4);
        for x in v.voxels.iter() {
            raw.extend_from_slice(&x.to_le_bytes());
        }
        write_atomic(&vdir.join(format!("{}.f32", v.id)), &raw)?;
        write_atomic(
            &vdir.join(format!("{}.json", v.id)),
            serde_json::to_string_pretty(&meta)?.as_bytes(),
        )?;
    }
    save_index(db, root)
}

/// Rewrites only `db.json`; used after pool moves.
pub fn save_index(db: &TestCaseDatabase, root: &Path) -> Result<()> {
    fs::create_dir_all(root)?;
    let index = DbIndex {
        format_version: DB_FORMAT_VERSION,
        volume_ids: db.volumes.keys().cloned().collect(),
        unlabeled: db.unlabeled.clone(),
        labeled: db.labeled.clone(),
        splits: db.splits.clone(),
        reference: db.reference.clone(),
    };
    write_atomic(&root.join("db.json"), serde_json::to_string_pretty(&index)?.as_bytes())
}

fn corrupt(path: &Path, reason: impl Into<String>) -> AlqaError {
    AlqaError::Corrupt {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => AlqaError::NotFound(path.to_path_buf()),
        _ => AlqaError::Io(e),
    })?;
    serde_json::from_str(&text).map_err(|e| corrupt(path, e.to_string()))
}

fn check_version(found: u32) -> Result<()> {
    if found != DB_FORMAT_VERSION {
        return Err(AlqaError::VersionMismatch {
            expected: DB_FORMAT_VERSION,
            found,
        });
    }
    Ok(())
}

pub fn load_volume(root: &Path, id: &str) -> Result<ImageVolume> {
    let vdir = volume_dir(root);
    let meta_path = vdir.join(format!("{id}.json"));
    let meta: VolumeMeta = read_json(&meta_path)?;
    check_version(meta.format_version)?;
    if meta.id != id {
        return Err(corrupt(&meta_path, format!("metadata names volume {}", meta.id)));
    }
    let raw_path = vdir.join(format!("{id}.f32"));
    let raw = fs::read(&raw_path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => AlqaError::NotFound(raw_path.clone()),
        _ => AlqaError::Io(e),
    })?;
    let (d, h, w) = meta.shape;
    let expected = d * h * w * 4;
    if raw.len() != expected {
        return Err(corrupt(
            &raw_path,
            format!("expected {expected} bytes, found {}", raw.len()),
        ));
    }
    let values: Vec<f32> = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let voxels = Array3::from_shape_vec((d, h, w), values).map_err(|e| corrupt(&raw_path, e.to_string()))?;
    let volume = ImageVolume {
        id: meta.id,
        patient_id: meta.patient_id,
        voxels,
        spacing: meta.spacing,
        provenance: meta.provenance,
    };
    volume.validate().map_err(|e| corrupt(&raw_path, e.to_string()))?;
    Ok(volume)
}

/// Loads everything or nothing.
pub fn load_database(root: &Path) -> Result<TestCaseDatabase> {
    let index_path = root.join("db.json");
    if !index_path.exists() {
        return Err(AlqaError::NotFound(index_path));
    }
    let index: DbIndex = read_json(&index_path)?;
    check_version(index.format_version)?;
    let mut db = TestCaseDatabase::new();
    for id in &index.volume_ids {
        db.insert(load_volume(root, id)?)?;
    }
    for id in index
        .unlabeled
        .iter()
        .chain(index.labeled.keys())
        .chain(index.reference.keys())
    {
        if !db.volumes.contains_key(id) {
            return Err(corrupt(&index_path, format!("unknown volume {id} in pools")));
        }
    }
    db.unlabeled = index.unlabeled;
    db.labeled = index.labeled;
    db.splits = index.splits;
    db.reference = index.reference;
    Ok(db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, split_database, CorpusConfig, SplitRatios};

    fn small_db() -> TestCaseDatabase {
        let cfg = CorpusConfig {
            count: 3,
            shape: (2, 16, 16),
            volumes_per_patient: (1, 1),
            ..CorpusConfig::default()
        };
        let mut db = generate_corpus(&cfg).unwrap();
        let splits = split_database(&db, SplitRatios::default(), 0).unwrap();
        db.set_splits(splits);
        db
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut db = small_db();
        let first = db.unlabeled.iter().next().cloned();
        if let Some(id) = first {
            let class = db.reference[&id];
            db.label(&id, class).unwrap();
        }
        save_database(&db, dir.path()).unwrap();
        let loaded = load_database(dir.path()).unwrap();
        assert_eq!(loaded, db);
    }

    #[test]
    fn truncated_volume_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let db = small_db();
        save_database(&db, dir.path()).unwrap();
        let id = db.volumes.keys().next().unwrap();
        let path = volume_dir(dir.path()).join(format!("{id}.f32"));
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_database(dir.path()), Err(AlqaError::Corrupt { .. })));
    }

    #[test]
    fn empty_directory_is_not_found() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_database(dir.path()), Err(AlqaError::NotFound(_))));
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_database(&small_db(), dir.path()).unwrap();
        let path = dir.path().join("db.json");
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 99");
        fs::write(&path, text).unwrap();
        assert!(matches!(
            load_database(dir.path()),
            Err(AlqaError::VersionMismatch { found: 99, .. })
        ));
    }
}
