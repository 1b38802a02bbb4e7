//! Binary PGM (P5) reader/writer. Maxval 255 maps to 8-bit images, maxval
//! 65535 to 16-bit with big-endian sample order; anything else is rejected.
//! PGM carries no physical metadata, so pixel spacing is supplied by the
//! caller (normally from the manifest).

use std::io::Write;
use std::path::Path;

use super::DataError;
use crate::imaging::{BitDepth, RasterImage};

pub fn read_pgm(path: &Path, spacing_mm: f64) -> Result<RasterImage, DataError> {
    let bytes = std::fs::read(path).map_err(|e| DataError::io(path, e))?;
    parse_pgm(&bytes, path, spacing_mm)
}

fn parse_pgm(bytes: &[u8], path: &Path, spacing_mm: f64) -> Result<RasterImage, DataError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        if bytes.starts_with(b"P2") {
            return Err(DataError::Unsupported(format!(
                "{}: ASCII PGM (P2); only binary P5 is supported",
                path.display()
            )));
        }
        return Err(DataError::parse(path, 1, "not a P5 PGM (bad magic)"));
    }

    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        *field = read_header_int(bytes, &mut pos, path)?;
    }
    let [width, height, maxval] = fields;
    // Exactly one whitespace byte separates the header from raster data.
    pos += 1;

    if width == 0 || height == 0 {
        return Err(DataError::parse(path, 1, "zero image dimension"));
    }
    let depth = match maxval {
        255 => BitDepth::Eight,
        65535 => BitDepth::Sixteen,
        other => {
            return Err(DataError::Unsupported(format!(
                "{}: maxval {other}; only 255 and 65535 are supported",
                path.display()
            )))
        }
    };

    let n = width * height;
    let bytes_per = if maxval > 255 { 2 } else { 1 };
    let data = &bytes[pos.min(bytes.len())..];
    if data.len() < n * bytes_per {
        return Err(DataError::parse(
            path,
            1,
            format!(
                "truncated raster: need {} bytes, have {}",
                n * bytes_per,
                data.len()
            ),
        ));
    }

    let pixels: Vec<u16> = if bytes_per == 1 {
        data[..n].iter().map(|&b| b as u16).collect()
    } else {
        data[..n * 2]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };

    RasterImage::new(width, height, spacing_mm, depth, pixels)
        .map_err(|e| DataError::parse(path, 1, e.to_string()))
}

fn read_header_int(bytes: &[u8], pos: &mut usize, path: &Path) -> Result<usize, DataError> {
    // Skip whitespace and '#' comments between header tokens.
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if *pos == start {
        return Err(DataError::parse(path, 1, "malformed PGM header"));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| DataError::parse(path, 1, "malformed PGM header"))
}

pub fn write_pgm(path: &Path, img: &RasterImage) -> Result<(), DataError> {
    let maxval: u32 = match img.depth {
        BitDepth::Eight => 255,
        BitDepth::Sixteen => 65535,
    };
    let mut out = Vec::with_capacity(img.pixels.len() * 2 + 32);
    write!(out, "P5\n{} {}\n{}\n", img.width, img.height, maxval).unwrap();
    match img.depth {
        BitDepth::Eight => out.extend(img.pixels.iter().map(|&p| p as u8)),
        BitDepth::Sixteen => {
            for &p in &img.pixels {
                out.extend_from_slice(&p.to_be_bytes());
            }
        }
    }
    std::fs::write(path, out).map_err(|e| DataError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(bytes: &[u8]) -> Result<RasterImage, DataError> {
        parse_pgm(bytes, Path::new("test.pgm"), 0.2)
    }

    #[test]
    fn roundtrip_8bit() {
        let img = RasterImage::new(
            3,
            2,
            0.2,
            BitDepth::Eight,
            vec![0, 10, 255, 30, 40, 50],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        write_pgm(&path, &img).unwrap();
        let back = read_pgm(&path, 0.2).unwrap();
        assert_eq!(back.pixels, img.pixels);
        assert_eq!((back.width, back.height), (3, 2));
        assert_eq!(back.depth, BitDepth::Eight);
    }

    #[test]
    fn roundtrip_16bit() {
        let img = RasterImage::new(
            2,
            2,
            0.2,
            BitDepth::Sixteen,
            vec![0, 65535, 258, 40000],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        write_pgm(&path, &img).unwrap();
        let back = read_pgm(&path, 0.2).unwrap();
        assert_eq!(back.pixels, img.pixels);
        assert_eq!(back.depth, BitDepth::Sixteen);
    }

    #[test]
    fn sixteen_bit_is_big_endian() {
        let bytes = b"P5\n1 1\n65535\n\x01\x02";
        let img = parse(bytes).unwrap();
        assert_eq!(img.pixels, vec![0x0102]);
    }

    #[test]
    fn header_comments_allowed() {
        let bytes = b"P5\n# made by hand\n2 1\n255\n\x07\x09";
        let img = parse(bytes).unwrap();
        assert_eq!(img.pixels, vec![7, 9]);
    }

    #[test]
    fn rejects_ascii_pgm() {
        let err = parse(b"P2\n1 1\n255\n7\n").unwrap_err();
        assert!(matches!(err, DataError::Unsupported(_)), "{err}");
    }

    #[test]
    fn rejects_bad_magic() {
        assert!(parse(b"P6\n1 1\n255\nabc").is_err());
    }

    #[test]
    fn rejects_odd_maxval() {
        let err = parse(b"P5\n1 1\n1023\n\x00\x00").unwrap_err();
        assert!(matches!(err, DataError::Unsupported(_)), "{err}");
    }

    #[test]
    fn rejects_truncated_raster() {
        let err = parse(b"P5\n2 2\n255\n\x01\x02").unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn rejects_zero_dimension() {
        assert!(parse(b"P5\n0 4\n255\n").is_err());
    }
}
