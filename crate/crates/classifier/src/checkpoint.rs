//! `OAMC` checkpoints: architecture, f32 weights, optional Adam state and
//! training metrics. Little-endian throughout.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{ClassifierError, Result};
use crate::model::{Architecture, Model, Params};
use crate::optim::AdamState;
use crate::tensor::Tensor;
use crate::train::Metrics;

pub const MAGIC: &[u8; 4] = b"OAMC";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: Model<f32>,
    pub adam: Option<AdamState<f32>>,
    pub metrics: Metrics,
}

fn format_err(msg: impl Into<String>) -> ClassifierError {
    ClassifierError::Format(msg.into())
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_bytes<W: Write>(w: &mut W, b: &[u8]) -> Result<()> {
    put_u32(w, b.len() as u32)?;
    w.write_all(b)?;
    Ok(())
}

fn put_params<W: Write>(w: &mut W, p: &Params<f32>) -> Result<()> {
    for t in &p.tensors {
        for v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn get<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| format_err(format!("truncated checkpoint: {e}")))?;
    Ok(b)
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(get(r)?))
}

fn get_bytes<R: Read>(r: &mut R, limit: usize) -> Result<Vec<u8>> {
    let n = get_u32(r)? as usize;
    if n > limit {
        return Err(format_err(format!("field length {n} exceeds {limit}")));
    }
    let mut b = vec![0u8; n];
    r.read_exact(&mut b).map_err(|e| format_err(format!("truncated checkpoint: {e}")))?;
    Ok(b)
}

fn get_params<R: Read>(r: &mut R, arch: &Architecture) -> Result<Params<f32>> {
    let mut tensors = Vec::new();
    for shape in arch.param_shapes() {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f32::from_le_bytes(get(r)?));
        }
        tensors.push(Tensor::new(shape, data)?);
    }
    Ok(Params { tensors })
}

pub fn write_checkpoint<W: Write>(w: &mut W, model: &Model<f32>, adam: Option<&AdamState<f32>>, metrics: &Metrics) -> Result<()> {
    let arch = model.arch();
    w.write_all(MAGIC)?;
    put_u32(w, VERSION)?;
    put_u32(w, arch.classes as u32)?;
    put_bytes(w, arch.spec_string().as_bytes())?;
    put_u32(w, arch.input as u32)?;
    for c in arch.channels {
        put_u32(w, c as u32)?;
    }
    w.write_all(&model.dropout().to_le_bytes())?;
    put_params(w, model.params())?;
    match adam {
        Some(s) => {
            w.write_all(&[1])?;
            w.write_all(&s.t.to_le_bytes())?;
            put_params(w, &s.m)?;
            put_params(w, &s.v)?;
        }
        None => w.write_all(&[0])?,
    }
    put_bytes(w, serde_json::to_string(metrics)?.as_bytes())?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Checkpoint> {
    if &get::<4, _>(r)? != MAGIC {
        return Err(format_err("not an OAMC checkpoint"));
    }
    let version = get_u32(r)?;
    if version != VERSION {
        return Err(format_err(format!("unsupported checkpoint version {version}")));
    }
    let classes = get_u32(r)? as usize;
    let spec = String::from_utf8(get_bytes(r, 4096)?).map_err(|_| format_err("layer spec is not UTF-8"))?;
    let input = get_u32(r)? as usize;
    let channels = [get_u32(r)? as usize, get_u32(r)? as usize, get_u32(r)? as usize];
    let arch = Architecture::new(input, channels, classes).map_err(|e| format_err(e.to_string()))?;
    if arch.spec_string() != spec {
        return Err(format_err(format!("layer spec {spec:?} does not match the stored architecture")));
    }
    let dropout = f64::from_le_bytes(get(r)?);
    let params = get_params(r, &arch)?;
    let model = Model::from_params(arch, dropout, params).map_err(|e| format_err(e.to_string()))?;
    let adam = match get::<1, _>(r)?[0] {
        0 => None,
        1 => {
            let t = u64::from_le_bytes(get(r)?);
            let m = get_params(r, &arch)?;
            let v = get_params(r, &arch)?;
            Some(AdamState { m, v, t })
        }
        f => return Err(format_err(format!("bad optimiser flag {f}"))),
    };
    let metrics = serde_json::from_slice(&get_bytes(r, 1 << 24)?)?;
    Ok(Checkpoint { model, adam, metrics })
}

/// Written to a temporary sibling then renamed, so a crash never leaves a
/// half-written checkpoint behind.
pub fn save_checkpoint(path: &Path, model: &Model<f32>, adam: Option<&AdamState<f32>>, metrics: &Metrics) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write_checkpoint(&mut w, model, adam, metrics)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    read_checkpoint(&mut BufReader::new(File::open(path)?))
}

/// Load and check the class count against what the caller expects.
pub fn load_for_classes(path: &Path, classes: usize) -> Result<Checkpoint> {
    let ck = load_checkpoint(path)?;
    if ck.model.arch().classes != classes {
        return Err(ClassifierError::Validation(format!(
            "checkpoint has {} classes, dataset has {classes}",
            ck.model.arch().classes
        )));
    }
    Ok(ck)
}
