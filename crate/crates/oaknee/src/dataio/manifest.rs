//! Dataset manifest: one CSV row per knee with paths to the raster and
//! landmark files plus identity and grading columns. All paths are resolved
//! relative to the manifest's directory.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{mix_hash, DataError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_path: String,
    pub points_path: String,
    pub knee_id: String,
    pub subject_id: String,
    pub side: String,
    pub kl_grade: u8,
    pub spacing_mm: f64,
}

impl ManifestEntry {
    /// Binary label: KL grade 2 or above counts as diseased.
    pub fn label(&self) -> u8 {
        (self.kl_grade >= 2) as u8
    }

    pub fn image_file(&self, manifest_dir: &Path) -> PathBuf {
        manifest_dir.join(&self.image_path)
    }

    pub fn points_file(&self, manifest_dir: &Path) -> PathBuf {
        manifest_dir.join(&self.points_path)
    }
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| DataError::ManifestError(format!("{}: {e}", path.display())))?;

    let mut entries: Vec<ManifestEntry> = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.deserialize().enumerate() {
        let line = i + 2;
        let entry: ManifestEntry = record
            .map_err(|e| DataError::parse(path, line, e.to_string()))?;
        if entry.kl_grade > 4 {
            return Err(DataError::parse(
                path,
                line,
                format!("kl_grade {} out of range 0..=4", entry.kl_grade),
            ));
        }
        if !(entry.spacing_mm.is_finite() && entry.spacing_mm > 0.0) {
            return Err(DataError::parse(
                path,
                line,
                format!("invalid spacing_mm {}", entry.spacing_mm),
            ));
        }
        if !seen.insert(entry.knee_id.clone()) {
            return Err(DataError::ManifestError(format!(
                "{}:{line}: duplicate knee_id '{}'",
                path.display(),
                entry.knee_id
            )));
        }
        entries.push(entry);
    }
    if entries.is_empty() {
        return Err(DataError::ManifestError(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok(entries)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| DataError::ManifestError(format!("{}: {e}", path.display())))?;
    for entry in entries {
        writer
            .serialize(entry)
            .map_err(|e| DataError::ManifestError(format!("{}: {e}", path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| DataError::io(path, e))
}

/// Deterministic subject-level split: both knees of a subject land on the
/// same side. Returns (train, holdout) index lists into `entries`.
pub fn subject_split(
    entries: &[ManifestEntry],
    holdout_fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let threshold = (holdout_fraction.clamp(0.0, 1.0) * 1000.0).round() as u64;
    let mut train = Vec::new();
    let mut holdout = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        let h = mix_hash(seed, &[e.subject_id.as_bytes()]);
        if h % 1000 < threshold {
            holdout.push(i);
        } else {
            train.push(i);
        }
    }
    (train, holdout)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(knee: &str, subject: &str, kl: u8) -> ManifestEntry {
        ManifestEntry {
            image_path: format!("{knee}.pgm"),
            points_path: format!("{knee}.pts"),
            knee_id: knee.into(),
            subject_id: subject.into(),
            side: "L".into(),
            kl_grade: kl,
            spacing_mm: 0.2,
        }
    }

    #[test]
    fn roundtrip_and_label() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        let entries = vec![entry("k0", "s0", 0), entry("k1", "s0", 3)];
        write_manifest(&path, &entries).unwrap();
        let back = load_manifest(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].label(), 0);
        assert_eq!(back[1].label(), 1);
        assert_eq!(back[1].spacing_mm, 0.2);
    }

    #[test]
    fn rejects_duplicate_knee_id() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        write_manifest(&path, &[entry("k0", "s0", 0), entry("k0", "s1", 1)]).unwrap();
        let err = load_manifest(&path).unwrap_err();
        assert!(err.to_string().contains("duplicate knee_id"), "{err}");
    }

    #[test]
    fn rejects_bad_kl_grade() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        write_manifest(&path, &[entry("k0", "s0", 9)]).unwrap();
        assert!(load_manifest(&path).is_err());
    }

    #[test]
    fn rejects_missing_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        std::fs::write(&path, "image_path,points_path,knee_id\na.pgm,a.pts,k0\n").unwrap();
        assert!(load_manifest(&path).is_err());
    }

    #[test]
    fn rejects_empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        std::fs::write(
            &path,
            "image_path,points_path,knee_id,subject_id,side,kl_grade,spacing_mm\n",
        )
        .unwrap();
        assert!(load_manifest(&path).is_err());
    }

    #[test]
    fn split_keeps_subjects_together() {
        let entries: Vec<_> = (0..200)
            .map(|i| entry(&format!("k{i}"), &format!("s{}", i / 2), (i % 5) as u8))
            .collect();
        let (train, holdout) = subject_split(&entries, 0.2, 7);
        assert_eq!(train.len() + holdout.len(), entries.len());
        assert!(!holdout.is_empty() && !train.is_empty());
        let holdout_subjects: std::collections::HashSet<_> =
            holdout.iter().map(|&i| &entries[i].subject_id).collect();
        for &i in &train {
            assert!(!holdout_subjects.contains(&entries[i].subject_id));
        }
        // Fraction should be in the right ballpark for 100 subjects.
        let frac = holdout.len() as f64 / entries.len() as f64;
        assert!((0.08..0.35).contains(&frac), "holdout fraction {frac}");
    }

    #[test]
    fn split_is_deterministic_and_seed_sensitive() {
        let entries: Vec<_> = (0..50)
            .map(|i| entry(&format!("k{i}"), &format!("s{i}"), 0))
            .collect();
        let a = subject_split(&entries, 0.25, 1);
        let b = subject_split(&entries, 0.25, 1);
        assert_eq!(a, b);
        let c = subject_split(&entries, 0.25, 2);
        assert_ne!(a.1, c.1);
    }
}
