//! EMB1 binary embedding format.
//!
//! ```text
//! "EMB1" | version u32 | N u32 | D u32 | C u32 | labels N×u32 | features N×D×f32
//! ```
//!
//! All integers and floats are little-endian; features are row-major.

use std::io::{Read, Write};
use std::path::Path;

use super::EmbeddingDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const EMB1_MAGIC: [u8; 4] = *b"EMB1";
pub const EMB1_VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn u32(&mut self, what: &str) -> Result<u32> {
        let bytes = self.take(4, what)?;
        Ok(u32::from_le_bytes(bytes.try_into().unwrap()))
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&[u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::parse(
                self.pos,
                format!(
                    "truncated {what}: expected {len} bytes, found {}",
                    self.buf.len() - self.pos
                ),
            )),
        }
    }
}

/// Parses an EMB1 stream held in memory.
pub fn parse_emb1(bytes: &[u8]) -> Result<EmbeddingDataset> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != EMB1_MAGIC {
        return Err(Error::parse(0, format!("bad magic {magic:02x?}, expected \"EMB1\"")));
    }
    let version = cur.u32("version")?;
    if version != EMB1_VERSION {
        return Err(Error::parse(4, format!("unsupported version {version}")));
    }
    let n = cur.u32("sample count")? as usize;
    let d = cur.u32("dimension")? as usize;
    let c = cur.u32("class count")? as usize;

    let labels_len = n
        .checked_mul(4)
        .ok_or_else(|| Error::parse(8, "sample count overflows"))?;
    let features_len = n
        .checked_mul(d)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| Error::parse(12, "feature block size overflows"))?;
    let expected = HEADER_LEN + labels_len + features_len;
    if bytes.len() < expected {
        return Err(Error::parse(
            bytes.len(),
            format!(
                "truncated stream: header declares {expected} bytes, found {}",
                bytes.len()
            ),
        ));
    }
    if bytes.len() > expected {
        return Err(Error::parse(
            expected,
            format!("{} trailing bytes after feature block", bytes.len() - expected),
        ));
    }

    let label_bytes = cur.take(labels_len, "labels")?;
    let mut labels = Vec::with_capacity(n);
    for (i, chunk) in label_bytes.chunks_exact(4).enumerate() {
        let label = u32::from_le_bytes(chunk.try_into().unwrap()) as usize;
        if label >= c {
            return Err(Error::parse(
                HEADER_LEN + 4 * i,
                format!("label {label} of sample {i} is not below class count {c}"),
            ));
        }
        labels.push(label);
    }

    let feature_start = cur.pos;
    let feature_bytes = cur.take(features_len, "features")?;
    let mut data = Vec::with_capacity(n * d);
    for (i, chunk) in feature_bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::parse(
                feature_start + 4 * i,
                format!("non-finite feature {v} at sample {}, column {}", i / d, i % d),
            ));
        }
        data.push(f64::from(v));
    }
    EmbeddingDataset::new(Matrix::from_vec(n, d, data)?, labels, c)
}

pub fn read_emb1<R: Read>(mut reader: R) -> Result<EmbeddingDataset> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    parse_emb1(&bytes)
}

pub fn read_emb1_file(path: impl AsRef<Path>) -> Result<EmbeddingDataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    parse_emb1(&bytes)
}

/// Serializes a dataset. Features are narrowed to `f32`; a value that
/// overflows `f32` is rejected.
pub fn encode_emb1(ds: &EmbeddingDataset) -> Result<Vec<u8>> {
    let as_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::config(format!("{what} {v} does not fit in u32")))
    };
    let (n, d, c) = (ds.len(), ds.dim(), ds.num_classes());
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * n + 4 * n * d);
    out.extend_from_slice(&EMB1_MAGIC);
    out.extend_from_slice(&EMB1_VERSION.to_le_bytes());
    out.extend_from_slice(&as_u32(n, "sample count")?.to_le_bytes());
    out.extend_from_slice(&as_u32(d, "dimension")?.to_le_bytes());
    out.extend_from_slice(&as_u32(c, "class count")?.to_le_bytes());
    for &l in ds.labels() {
        out.extend_from_slice(&(l as u32).to_le_bytes());
    }
    for (i, &v) in ds.features().as_slice().iter().enumerate() {
        let narrow = v as f32;
        if !narrow.is_finite() {
            return Err(Error::config(format!(
                "feature {v} of sample {} overflows f32",
                i / d.max(1)
            )));
        }
        out.extend_from_slice(&narrow.to_le_bytes());
    }
    Ok(out)
}

pub fn write_emb1<W: Write>(ds: &EmbeddingDataset, mut writer: W) -> Result<()> {
    writer.write_all(&encode_emb1(ds)?)?;
    Ok(())
}

pub fn write_emb1_file(ds: &EmbeddingDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_emb1(ds)?;
    std::fs::write(path, bytes).map_err(|e| Error::file(path, e))
}
