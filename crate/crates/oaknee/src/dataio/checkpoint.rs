//! Binary model checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic  "OAKN"
//! u32    format version (1)
//! u32    arch tag length, then UTF-8 bytes
//! u32    metadata length, then UTF-8 JSON
//! u32    tensor count
//! per tensor:
//!   u32  name length, then UTF-8 bytes
//!   u8   dtype (0 = f32, 1 = f64)
//!   u32  ndim, then ndim x u64 dims
//!   raw  little-endian element data
//! u64    FNV-1a of everything before it
//! ```

use std::io::Write;
use std::path::Path;

use super::DataError;
use crate::tensornet::Tensor;

const MAGIC: &[u8; 4] = b"OAKN";
const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct TensorRecord {
    pub name: String,
    pub tensor: Tensor<f32>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub arch: String,
    pub meta: serde_json::Value,
    pub tensors: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn tensor(&self, name: &str) -> Result<&Tensor<f32>, DataError> {
        self.tensors
            .iter()
            .find(|r| r.name == name)
            .map(|r| &r.tensor)
            .ok_or_else(|| DataError::CheckpointError(format!("missing tensor '{name}'")))
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        put_str(&mut buf, &self.arch);
        put_str(&mut buf, &self.meta.to_string());
        buf.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for rec in &self.tensors {
            put_str(&mut buf, &rec.name);
            buf.push(0u8);
            buf.extend_from_slice(&(rec.tensor.shape.len() as u32).to_le_bytes());
            for &d in &rec.tensor.shape {
                buf.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for &v in &rec.tensor.data {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        let sum = fnv1a(&buf);
        buf.extend_from_slice(&sum.to_le_bytes());
        let mut f = std::fs::File::create(path).map_err(|e| DataError::io(path, e))?;
        f.write_all(&buf).map_err(|e| DataError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let bytes = std::fs::read(path).map_err(|e| DataError::io(path, e))?;
        let bad = |msg: &str| DataError::CheckpointError(format!("{}: {msg}", path.display()));

        if bytes.len() < 12 {
            return Err(bad("file too short"));
        }
        let body_len = bytes.len() - 8;
        let stored = u64::from_le_bytes(bytes[body_len..].try_into().unwrap());
        if fnv1a(&bytes[..body_len]) != stored {
            return Err(bad("checksum mismatch"));
        }
        let body = &bytes[..body_len];
        if &body[..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut pos = 4;
        let version = get_u32(body, &mut pos).ok_or_else(|| bad("truncated header"))?;
        if version != VERSION {
            return Err(bad(&format!("unsupported format version {version}")));
        }
        let arch = get_str(body, &mut pos).ok_or_else(|| bad("truncated arch tag"))?;
        let meta_text = get_str(body, &mut pos).ok_or_else(|| bad("truncated metadata"))?;
        let meta: serde_json::Value = serde_json::from_str(&meta_text)
            .map_err(|e| bad(&format!("metadata is not valid JSON: {e}")))?;

        let count = get_u32(body, &mut pos).ok_or_else(|| bad("truncated tensor count"))?;
        let mut tensors = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let name = get_str(body, &mut pos).ok_or_else(|| bad("truncated tensor name"))?;
            let dtype = *body.get(pos).ok_or_else(|| bad("truncated dtype"))?;
            pos += 1;
            if dtype != 0 {
                return Err(bad(&format!("unsupported dtype {dtype}")));
            }
            let ndim = get_u32(body, &mut pos).ok_or_else(|| bad("truncated ndim"))? as usize;
            let mut shape = Vec::with_capacity(ndim);
            let mut len = 1usize;
            for _ in 0..ndim {
                let d = get_u64(body, &mut pos).ok_or_else(|| bad("truncated dims"))? as usize;
                len = len
                    .checked_mul(d)
                    .ok_or_else(|| bad("tensor size overflow"))?;
                shape.push(d);
            }
            let end = pos
                .checked_add(len * 4)
                .filter(|&e| e <= body.len())
                .ok_or_else(|| bad("truncated tensor data"))?;
            let data: Vec<f32> = body[pos..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            pos = end;
            tensors.push(TensorRecord {
                name,
                tensor: Tensor { shape, data },
            });
        }
        if pos != body.len() {
            return Err(bad("trailing bytes after tensor table"));
        }
        Ok(Checkpoint { arch, meta, tensors })
    }
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

fn get_u32(buf: &[u8], pos: &mut usize) -> Option<u32> {
    let end = pos.checked_add(4)?;
    let v = u32::from_le_bytes(buf.get(*pos..end)?.try_into().unwrap());
    *pos = end;
    Some(v)
}

fn get_u64(buf: &[u8], pos: &mut usize) -> Option<u64> {
    let end = pos.checked_add(8)?;
    let v = u64::from_le_bytes(buf.get(*pos..end)?.try_into().unwrap());
    *pos = end;
    Some(v)
}

fn get_str(buf: &[u8], pos: &mut usize) -> Option<String> {
    let len = get_u32(buf, pos)? as usize;
    let end = pos.checked_add(len).filter(|&e| e <= buf.len())?;
    let s = std::str::from_utf8(&buf[*pos..end]).ok()?.to_string();
    *pos = end;
    Some(s)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Checkpoint {
        Checkpoint {
            arch: "js2-nn".into(),
            meta: json!({"seed": 42, "mean": [1.0, 2.0]}),
            tensors: vec![
                TensorRecord {
                    name: "fc1.weight".into(),
                    tensor: Tensor::from_vec(&[2, 3], vec![1.0, -2.5, 3.0, 0.0, 0.5, 9.0]),
                },
                TensorRecord {
                    name: "fc1.bias".into(),
                    tensor: Tensor::from_vec(&[3], vec![0.1, 0.2, 0.3]),
                },
            ],
        }
    }

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let ck = sample();
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.arch, "js2-nn");
        assert_eq!(back.meta["seed"], 42);
        assert_eq!(back.tensors.len(), 2);
        let w = back.tensor("fc1.weight").unwrap();
        assert_eq!(w.shape, vec![2, 3]);
        assert_eq!(w.data, ck.tensors[0].tensor.data);
        assert!(back.tensor("nope").is_err());
    }

    #[test]
    fn save_is_byte_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.ckpt");
        let b = dir.path().join("b.ckpt");
        sample().save(&a).unwrap();
        sample().save(&b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn detects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        sample().save(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        std::fs::write(&path, bytes).unwrap();
        let err = Checkpoint::load(&path).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");
    }

    #[test]
    fn rejects_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        sample().save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        assert!(Checkpoint::load(&path).is_err());
    }

    #[test]
    fn rejects_foreign_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        std::fs::write(&path, b"definitely not a checkpoint file").unwrap();
        assert!(Checkpoint::load(&path).is_err());
    }
}
