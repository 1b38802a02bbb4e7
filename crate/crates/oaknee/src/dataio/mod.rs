//! File formats (.pts landmarks, PGM rasters, manifest CSV, checkpoints),
//! dataset assembly with subject-level splits, and the calibrated synthetic
//! data generator.

pub mod checkpoint;
pub mod manifest;
pub mod pgm;
pub mod pts;
pub mod synth;

pub use checkpoint::{Checkpoint, TensorRecord};
pub use manifest::{load_manifest, subject_split, ManifestEntry};
pub use synth::SynthConfig;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}:{line}: {msg}")]
    ParseError {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("manifest error: {0}")]
    ManifestError(String),
    #[error("checkpoint error: {0}")]
    CheckpointError(String),
    #[error("i/o error on {path}: {source}")]
    IoError {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DataError {
    pub fn parse(path: &std::path::Path, line: usize, msg: impl Into<String>) -> Self {
        DataError::ParseError {
            path: path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        DataError::IoError {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Seeded 64-bit mixing hash used for subject splits and per-worker RNG
/// streams; stable across platforms.
pub fn mix_hash(seed: u64, parts: &[&[u8]]) -> u64 {
    // FNV-1a over the parts, then a splitmix64 finalizer for uniformity.
    let mut h = 0xcbf29ce484222325u64 ^ seed.wrapping_mul(0x9e3779b97f4a7c15);
    for part in parts {
        for &b in *part {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
