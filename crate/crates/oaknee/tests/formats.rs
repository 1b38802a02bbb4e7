//! Malformed landmark, raster, manifest and checkpoint files must come
//! back as typed errors with useful context, never panics or garbage data.

mod common;

use oaknee::dataio::DataError;

#[test]
fn malformed_inputs_produce_typed_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = common::malformed_cases(dir.path());
    assert!(cases.len() >= 12, "only {} fixtures", cases.len());

    for case in &cases {
        let expect_parse = matches!(
            case.error,
            DataError::ParseError { .. } | DataError::ManifestError(_)
        );
        match case.name {
            n if n.starts_with("pts_") => {
                assert!(
                    matches!(case.error, DataError::ParseError { .. }),
                    "{n}: {:?}",
                    case.error
                );
            }
            "pgm_ascii.pgm" | "pgm_bad_maxval.pgm" => {
                assert!(
                    matches!(case.error, DataError::Unsupported(_)),
                    "{}: {:?}",
                    case.name,
                    case.error
                );
            }
            n if n.starts_with("pgm_") => {
                assert!(
                    matches!(case.error, DataError::ParseError { .. }),
                    "{n}: {:?}",
                    case.error
                );
            }
            n if n.starts_with("manifest_") => {
                assert!(expect_parse, "{n}: {:?}", case.error);
            }
            n if n.starts_with("ckpt_") => {
                assert!(
                    matches!(case.error, DataError::CheckpointError(_)),
                    "{n}: {:?}",
                    case.error
                );
            }
            other => panic!("unexpected fixture {other}"),
        }
    }
}

#[test]
fn parse_errors_carry_path_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.pts");
    std::fs::write(&path, "version: 1\nn_points: 1\n{\nx y\n}\n").unwrap();
    let err = oaknee::dataio::pts::read_pts(&path).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("broken.pts"), "{msg}");
    assert!(msg.contains(":4:"), "{msg}");
}

#[test]
fn missing_file_is_an_io_error() {
    let err = oaknee::dataio::pts::read_pts(std::path::Path::new("/nonexistent/x.pts"))
        .unwrap_err();
    assert!(matches!(err, DataError::IoError { .. }), "{err:?}");
}
