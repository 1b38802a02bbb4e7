//! Malformed-input fixtures shared by the format and acceptance tests.
//! Each case writes one broken file and probes the matching reader; the
//! builder panics if any reader accepts its broken input.

use std::path::Path;

use oaknee::dataio::{load_manifest, pgm, pts, Checkpoint, DataError};
use oaknee::Tensor32;

// Fields are read by some consumers of this shared module but not all.
#[allow(dead_code)]
pub struct MalformedCase {
    pub name: &'static str,
    pub error: DataError,
}

fn checkpoint_bytes() -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ok.ckpt");
    let ck = Checkpoint {
        arch: "logistic".to_string(),
        meta: serde_json::json!({"feature_set": "js2"}),
        tensors: vec![oaknee::dataio::TensorRecord {
            name: "weights".to_string(),
            tensor: Tensor32::from_vec(&[3], vec![0.5, -1.0, 2.0]),
        }],
    };
    ck.save(&path).unwrap();
    std::fs::read(&path).unwrap()
}

/// Writes every malformed fixture under `dir` and returns the typed error
/// each reader produced.
pub fn malformed_cases(dir: &Path) -> Vec<MalformedCase> {
    let text_cases: &[(&str, &str)] = &[
        ("pts_empty.pts", ""),
        ("pts_bad_version.pts", "version: 2\nn_points: 1\n{\n1 2\n}\n"),
        ("pts_missing_count.pts", "version: 1\n{\n1 2\n}\n"),
        (
            "pts_count_mismatch.pts",
            "version: 1\nn_points: 3\n{\n1 2\n3 4\n}\n",
        ),
        (
            "pts_non_numeric.pts",
            "version: 1\nn_points: 1\n{\none two\n}\n",
        ),
        (
            "pts_nan_coordinate.pts",
            "version: 1\nn_points: 1\n{\nnan 2\n}\n",
        ),
        (
            "pts_unclosed.pts",
            "version: 1\nn_points: 1\n{\n1 2\n",
        ),
    ];

    let mut cases = Vec::new();
    for &(name, text) in text_cases {
        let path = dir.join(name);
        std::fs::write(&path, text).unwrap();
        match pts::read_pts(&path) {
            Err(e) => cases.push(MalformedCase { name, error: e }),
            Ok(_) => panic!("{name}: reader accepted malformed input"),
        }
    }

    let pgm_cases: &[(&str, &[u8])] = &[
        ("pgm_ascii.pgm", b"P2\n2 2\n255\n0 0 0 0\n"),
        ("pgm_bad_magic.pgm", b"P6\n2 2\n255\n\0\0\0\0"),
        ("pgm_truncated.pgm", b"P5\n4 4\n255\n\0\0\0"),
        ("pgm_bad_maxval.pgm", b"P5\n2 2\n1023\n\0\0\0\0\0\0\0\0"),
        ("pgm_zero_dim.pgm", b"P5\n0 2\n255\n"),
        ("pgm_header_garbage.pgm", b"P5\nwide tall\n255\n"),
    ];
    for &(name, bytes) in pgm_cases {
        let path = dir.join(name);
        std::fs::write(&path, bytes).unwrap();
        match pgm::read_pgm(&path, 0.2) {
            Err(e) => cases.push(MalformedCase { name, error: e }),
            Ok(_) => panic!("{name}: reader accepted malformed input"),
        }
    }

    let header = "image_path,points_path,knee_id,subject_id,side,kl_grade,spacing_mm\n";
    let manifest_cases: &[(&str, String)] = &[
        (
            "manifest_ragged.csv",
            format!("{header}a.pgm,a.pts,k1,s1,L\n"),
        ),
        (
            "manifest_dup_knee.csv",
            format!("{header}a.pgm,a.pts,k1,s1,L,0,0.2\nb.pgm,b.pts,k1,s1,R,0,0.2\n"),
        ),
        (
            "manifest_bad_grade.csv",
            format!("{header}a.pgm,a.pts,k1,s1,L,9,0.2\n"),
        ),
        (
            "manifest_bad_spacing.csv",
            format!("{header}a.pgm,a.pts,k1,s1,L,0,0\n"),
        ),
        ("manifest_no_rows.csv", header.to_string()),
        (
            "manifest_non_numeric_grade.csv",
            format!("{header}a.pgm,a.pts,k1,s1,L,two,0.2\n"),
        ),
    ];
    for (name, text) in manifest_cases {
        let path = dir.join(name);
        std::fs::write(&path, text).unwrap();
        match load_manifest(&path) {
            Err(e) => cases.push(MalformedCase { name, error: e }),
            Ok(_) => panic!("{name}: reader accepted malformed input"),
        }
    }

    let good = checkpoint_bytes();
    let mut corrupted = good.clone();
    // Flip one payload byte so the trailing checksum no longer matches.
    let mid = corrupted.len() / 2;
    corrupted[mid] ^= 0xff;
    let ckpt_cases: &[(&str, Vec<u8>)] = &[
        ("ckpt_truncated.ckpt", good[..8].to_vec()),
        ("ckpt_flipped_byte.ckpt", corrupted),
        ("ckpt_not_a_checkpoint.ckpt", b"OAKN but not really a checkpoint".to_vec()),
    ];
    for (name, bytes) in ckpt_cases {
        let path = dir.join(name);
        std::fs::write(&path, bytes).unwrap();
        match Checkpoint::load(&path) {
            Err(e) => cases.push(MalformedCase { name, error: e }),
            Ok(_) => panic!("{name}: reader accepted malformed input"),
        }
    }

    cases
}
