//! Checkpoint layout (little-endian):
//!
//! ```text
//! "EGTK" | u16 version | u32 len + config JSON
//! u32 n_tensors, then per tensor: u16 len + name | u8 rank | u32 dims... | f32 values
//! ```
//!
//! Tensors are the parameters in registration order followed by each batch
//! norm's `running_mean` and `running_var`.

use std::fs;
use std::path::Path;

use crate::eegio::{put_str, ByteReader};
use crate::error::{Error, Result};
use crate::grad::{Real, RunningStats, Tensor};

use super::config::ModelConfig;
use super::net::Model;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"EGTK";
pub const CHECKPOINT_VERSION: u16 = 1;

fn put_tensor(out: &mut Vec<u8>, name: &str, shape: &[usize], values: impl Iterator<Item = f64>) -> Result<()> {
    put_str(out, name)?;
    out.push(shape.len() as u8);
    for &d in shape {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(())
}

pub fn encode_checkpoint<T: Real>(model: &Model<T>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let cfg = serde_json::to_vec(&model.config)?;
    out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
    out.extend_from_slice(&cfg);
    let norms = model.config.norm_specs();
    let n = model.params.len() + 2 * norms.len();
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for ((name, _), t) in model.config.param_specs().iter().zip(&model.params) {
        put_tensor(&mut out, name, t.shape(), t.data().iter().map(|v| v.as_f64()))?;
    }
    for ((name, c), s) in norms.iter().zip(&model.stats) {
        put_tensor(&mut out, &format!("{name}.running_mean"), &[*c], s.mean.iter().map(|v| v.as_f64()))?;
        put_tensor(&mut out, &format!("{name}.running_var"), &[*c], s.var.iter().map(|v| v.as_f64()))?;
    }
    Ok(out)
}

fn read_tensor(r: &mut ByteReader, expect_name: &str, expect_shape: &[usize]) -> Result<Vec<f32>> {
    let name = r.string("tensor name")?;
    if name != expect_name {
        return Err(Error::Checkpoint(format!("expected tensor {expect_name}, found {name}")));
    }
    let rank = r.u8("tensor rank")? as usize;
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        shape.push(r.u32("tensor shape")? as usize);
    }
    if shape != expect_shape {
        return Err(Error::Checkpoint(format!("{name}: shape {shape:?}, configuration implies {expect_shape:?}")));
    }
    let n: usize = shape.iter().product();
    let raw = r.take(4 * n, &name)?;
    let vals: Vec<f32> = raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Checkpoint(format!("{name} contains non-finite values")));
    }
    Ok(vals)
}

pub fn decode_checkpoint<T: Real>(bytes: &[u8]) -> Result<Model<T>> {
    let mut r = ByteReader::new(bytes);
    let magic: [u8; 4] = r.take(4, "magic")?.try_into().unwrap();
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic { expected: CHECKPOINT_MAGIC, found: magic });
    }
    let version = r.u16("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let len = r.u32("config length")? as usize;
    let config: ModelConfig = serde_json::from_slice(r.take(len, "config")?)?;
    config.validate()?;
    let specs = config.param_specs();
    let norms = config.norm_specs();
    let n = r.u32("tensor count")? as usize;
    if n != specs.len() + 2 * norms.len() {
        return Err(Error::Checkpoint(format!("{n} tensors, configuration implies {}", specs.len() + 2 * norms.len())));
    }
    let cast = |v: Vec<f32>| v.into_iter().map(|x| T::lit(x as f64)).collect::<Vec<T>>();
    let mut params = Vec::with_capacity(specs.len());
    for (name, shape) in &specs {
        params.push(Tensor::new(shape, cast(read_tensor(&mut r, name, shape)?))?);
    }
    let mut stats = Vec::with_capacity(norms.len());
    for (name, c) in &norms {
        let mean = cast(read_tensor(&mut r, &format!("{name}.running_mean"), &[*c])?);
        let var = cast(read_tensor(&mut r, &format!("{name}.running_var"), &[*c])?);
        stats.push(RunningStats { mean, var });
    }
    if r.remaining() != 0 {
        return Err(Error::Checkpoint(format!("{} trailing bytes", r.remaining())));
    }
    Ok(Model { config, params, stats })
}

pub fn write_checkpoint<T: Real>(model: &Model<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_checkpoint(model)?)?;
    Ok(())
}

pub fn read_checkpoint<T: Real>(path: impl AsRef<Path>) -> Result<Model<T>> {
    decode_checkpoint(&fs::read(path)?)
}
