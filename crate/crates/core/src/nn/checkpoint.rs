//! Binary model checkpoints.
//!
//! Layout (little-endian): magic `CGAU`, version u32, task tag u32
//! (0 binary, 1 multiclass), output count u32, dropout f64, layer count u32,
//! then per layer `kind u32, in u32, out u32, clients u32` (kind 0 CGAU,
//! 1 ReLU, 2 output head), then every parameter block as row-major f64 in
//! [`ClassifierModel::blocks`] order.

use std::io::{Read, Write};
use std::path::Path;

use super::layers::{CgauLayer, DenseLayer};
use super::model::{ClassifierModel, HiddenLayer, Task};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"CGAU";
pub const CHECKPOINT_VERSION: u32 = 1;

const KIND_CGAU: u32 = 0;
const KIND_RELU: u32 = 1;
const KIND_OUTPUT: u32 = 2;

fn u32_of(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::config(format!("{what} {v} does not fit in u32")))
}

pub fn encode_checkpoint(model: &ClassifierModel) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let (tag, outputs) = match model.task() {
        Task::Binary => (0u32, 1usize),
        Task::Multiclass(c) => (1, c),
    };
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&u32_of(outputs, "output count")?.to_le_bytes());
    out.extend_from_slice(&model.dropout().to_le_bytes());
    out.extend_from_slice(&u32_of(model.hidden().len() + 1, "layer count")?.to_le_bytes());

    let mut header = |kind: u32, i: usize, o: usize, k: usize| -> Result<()> {
        for v in [kind, u32_of(i, "width")?, u32_of(o, "width")?, u32_of(k, "client count")?] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(())
    };
    for layer in model.hidden() {
        match layer {
            HiddenLayer::Cgau(l) => header(KIND_CGAU, l.input_dim(), l.units(), l.num_clients())?,
            HiddenLayer::Relu(l) => header(KIND_RELU, l.input_dim(), l.output_dim(), 0)?,
        }
    }
    let head = model.output();
    header(KIND_OUTPUT, head.input_dim(), head.output_dim(), 0)?;

    for (_, block) in model.blocks() {
        for v in block.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(Error::parse(
                self.bytes.len(),
                format!("truncated checkpoint while reading {what}"),
            ));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ClassifierModel> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::parse(0, "not a CGAU checkpoint"));
    }
    let version = c.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::parse(4, format!("unsupported checkpoint version {version}")));
    }
    let task_at = c.pos;
    let tag = c.u32("task")?;
    let outputs = c.u32("output count")? as usize;
    let task = match (tag, outputs) {
        (0, 1) => Task::Binary,
        (1, c) if c >= 2 => Task::Multiclass(c),
        _ => return Err(Error::parse(task_at, format!("bad task tag {tag} with {outputs} outputs"))),
    };
    let dropout = c.f64("dropout")?;
    let layers = c.u32("layer count")? as usize;
    if layers == 0 {
        return Err(Error::parse(c.pos - 4, "checkpoint has no layers"));
    }

    let mut hidden = Vec::new();
    let mut head = None;
    for i in 0..layers {
        let at = c.pos;
        let kind = c.u32("layer kind")?;
        let d_in = c.u32("layer input")? as usize;
        let d_out = c.u32("layer output")? as usize;
        let k = c.u32("layer clients")? as usize;
        let last = i + 1 == layers;
        match (kind, last) {
            (KIND_CGAU, false) => hidden.push(HiddenLayer::Cgau(CgauLayer::zeros(d_in, d_out, k))),
            (KIND_RELU, false) => hidden.push(HiddenLayer::Relu(DenseLayer::zeros(d_in, d_out))),
            (KIND_OUTPUT, true) => head = Some(DenseLayer::zeros(d_in, d_out)),
            _ => return Err(Error::parse(at, format!("unexpected layer kind {kind} at layer {i}"))),
        }
    }
    let mut model = ClassifierModel::new(hidden, head.expect("last layer is the head"), task, dropout)
        .map_err(|e| Error::parse(task_at, e.to_string()))?;

    let expected: usize = model.num_parameters() * 8;
    let remaining = bytes.len() - c.pos;
    if remaining != expected {
        return Err(Error::parse(
            c.pos,
            format!("parameter section should hold {expected} bytes, found {remaining}"),
        ));
    }
    for (_, block) in model.blocks_mut() {
        for v in block.as_mut_slice() {
            *v = c.f64("parameters")?;
        }
    }
    Ok(model)
}

pub fn write_checkpoint<W: Write>(model: &ClassifierModel, mut writer: W) -> Result<()> {
    writer.write_all(&encode_checkpoint(model)?)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut reader: R) -> Result<ClassifierModel> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    decode_checkpoint(&bytes)
}

pub fn save_checkpoint(model: &ClassifierModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_checkpoint(model)?).map_err(|e| Error::file(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ClassifierModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    decode_checkpoint(&bytes)
}
