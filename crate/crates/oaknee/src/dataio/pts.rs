//! Landmark point files:
//!
//! ```text
//! version: 1
//! n_points: 30
//! {
//! 12.5 7.25
//! ...
//! }
//! ```
//!
//! Coordinates are millimetres in image space (x right, y down).

use std::io::Write;
use std::path::Path;

use super::DataError;
use crate::geometry::Point2D;

pub fn read_pts(path: &Path) -> Result<Vec<Point2D>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    parse_pts(&text, path)
}

fn parse_pts(text: &str, path: &Path) -> Result<Vec<Point2D>, DataError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, header) = lines
        .next()
        .ok_or_else(|| DataError::parse(path, 0, "empty file"))?;
    let version = header
        .strip_prefix("version:")
        .map(str::trim)
        .ok_or_else(|| DataError::parse(path, ln, "expected 'version:' header"))?;
    if version != "1" {
        return Err(DataError::parse(
            path,
            ln,
            format!("unsupported version '{version}'"),
        ));
    }

    let (ln, count_line) = lines
        .next()
        .ok_or_else(|| DataError::parse(path, ln, "missing 'n_points:' header"))?;
    let n: usize = count_line
        .strip_prefix("n_points:")
        .map(str::trim)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| DataError::parse(path, ln, "expected 'n_points: <count>'"))?;

    let (ln, brace) = lines
        .next()
        .ok_or_else(|| DataError::parse(path, ln, "missing '{'"))?;
    if brace != "{" {
        return Err(DataError::parse(path, ln, "expected '{'"));
    }

    let mut points = Vec::with_capacity(n);
    let mut last_ln = ln;
    for (ln, line) in lines {
        last_ln = ln;
        if line == "}" {
            if points.len() != n {
                return Err(DataError::parse(
                    path,
                    ln,
                    format!("expected {n} points, found {}", points.len()),
                ));
            }
            return Ok(points);
        }
        if points.len() == n {
            return Err(DataError::parse(path, ln, "more points than declared"));
        }
        let mut fields = line.split_whitespace();
        let x = fields.next().and_then(|v| v.parse::<f64>().ok());
        let y = fields.next().and_then(|v| v.parse::<f64>().ok());
        match (x, y, fields.next()) {
            (Some(x), Some(y), None) if x.is_finite() && y.is_finite() => {
                points.push(Point2D { x, y });
            }
            _ => {
                return Err(DataError::parse(
                    path,
                    ln,
                    format!("expected '<x> <y>', got '{line}'"),
                ))
            }
        }
    }
    Err(DataError::parse(path, last_ln, "missing closing '}'"))
}

pub fn write_pts(path: &Path, points: &[Point2D]) -> Result<(), DataError> {
    let mut out = String::new();
    out.push_str("version: 1\n");
    out.push_str(&format!("n_points: {}\n{{\n", points.len()));
    for p in points {
        out.push_str(&format!("{} {}\n", p.x, p.y));
    }
    out.push_str("}\n");
    let mut f = std::fs::File::create(path).map_err(|e| DataError::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| DataError::io(path, e))
}
