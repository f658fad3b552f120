//! Binary checkpoint format.
//!
//! Layout, all little-endian:
//! magic `PMN1` | version u32 | config block | meta block | param count u32 |
//! per param { name_len u32, name bytes, rank u32, dims u64..., values f32... } |
//! length checksum u64 (byte count of everything before the checksum).
//!
//! Values are stored as raw 32-bit floats, so a save/load round trip is
//! bit-exact at `f32`. A human-readable `<path>.manifest` sidecar lists the
//! parameter names, shapes, and the epoch.

use std::fs;
use std::path::Path;

use autodiff::{Element, Tensor};

use crate::config::{AttentionMode, PmnConfig, Variant};
use crate::error::ModelError;
use crate::params::ModelParams;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"PMN1";

/// Bookkeeping stored alongside the arrays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointMeta {
    pub epoch: u32,
    pub valid_auroc: f64,
}

/// A loaded checkpoint: configuration, parameters at `f32`, and metadata.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: PmnConfig,
    pub params: ModelParams<f32>,
    pub meta: CheckpointMeta,
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

/// Serializes config, params, and meta into checkpoint bytes.
pub fn encode<F: Element>(
    cfg: &PmnConfig,
    params: &ModelParams<F>,
    meta: &CheckpointMeta,
) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    push_u32(&mut buf, FORMAT_VERSION);

    push_u32(&mut buf, cfg.num_labels as u32);
    push_u32(&mut buf, cfg.embed_dim as u32);
    push_u32(&mut buf, cfg.seq_len as u32);
    push_u32(&mut buf, cfg.hops as u32);
    push_f64(&mut buf, cfg.epsilon);
    push_f64(&mut buf, cfg.lambda);
    push_f64(&mut buf, cfg.dropout);
    buf.push(match cfg.attention {
        AttentionMode::Sigmoid => 0,
        AttentionMode::SoftmaxHops => 1,
    });
    buf.push(match cfg.variant {
        Variant::CnnSingle => 0,
        Variant::CnnMulti => 1,
        Variant::PmnNoLstm => 2,
        Variant::Pmn => 3,
    });
    for c in cfg.conv_channels {
        push_u32(&mut buf, c as u32);
    }
    for w in cfg.conv_widths {
        push_u32(&mut buf, w as u32);
    }

    push_u32(&mut buf, meta.epoch);
    push_f64(&mut buf, meta.valid_auroc);

    let named = params.named();
    push_u32(&mut buf, named.len() as u32);
    for (name, tensor) in named {
        push_u32(&mut buf, name.len() as u32);
        buf.extend_from_slice(name.as_bytes());
        push_u32(&mut buf, tensor.shape().len() as u32);
        for dim in tensor.shape() {
            push_u64(&mut buf, *dim as u64);
        }
        for v in tensor.values() {
            buf.extend_from_slice(&(v.to_f64_c() as f32).to_le_bytes());
        }
    }

    let checksum = buf.len() as u64;
    push_u64(&mut buf, checksum);
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ModelError> {
        if self.at + n > self.bytes.len() {
            return Err(ModelError::Truncated(format!(
                "needed {n} bytes for {what} at offset {}",
                self.at
            )));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64, ModelError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn u8(&mut self, what: &str) -> Result<u8, ModelError> {
        Ok(self.take(1, what)?[0])
    }
}

/// Parses checkpoint bytes, verifying magic, version, and the trailing
/// length checksum before touching any array data.
pub fn decode(bytes: &[u8]) -> Result<Checkpoint, ModelError> {
    if bytes.len() < MAGIC.len() + 4 + 8 {
        return Err(ModelError::Truncated(format!("{} bytes total", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(ModelError::BadMagic);
    }
    let body_len = bytes.len() - 8;
    let stored = u64::from_le_bytes(bytes[body_len..].try_into().expect("8 bytes"));
    if stored != body_len as u64 {
        return Err(ModelError::Checksum {
            stored,
            computed: body_len as u64,
        });
    }

    let mut r = Reader { bytes: &bytes[..body_len], at: 4 };
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(ModelError::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }

    let num_labels = r.u32("num_labels")? as usize;
    let embed_dim = r.u32("embed_dim")? as usize;
    let seq_len = r.u32("seq_len")? as usize;
    let hops = r.u32("hops")? as usize;
    let epsilon = r.f64("epsilon")?;
    let lambda = r.f64("lambda")?;
    let dropout = r.f64("dropout")?;
    let attention = match r.u8("attention")? {
        0 => AttentionMode::Sigmoid,
        1 => AttentionMode::SoftmaxHops,
        v => return Err(ModelError::Format(format!("unknown attention tag {v}"))),
    };
    let variant = match r.u8("variant")? {
        0 => Variant::CnnSingle,
        1 => Variant::CnnMulti,
        2 => Variant::PmnNoLstm,
        3 => Variant::Pmn,
        v => return Err(ModelError::Format(format!("unknown variant tag {v}"))),
    };
    let mut conv_channels = [0usize; 3];
    for c in &mut conv_channels {
        *c = r.u32("conv channel")? as usize;
    }
    let mut conv_widths = [0usize; 3];
    for w in &mut conv_widths {
        *w = r.u32("conv width")? as usize;
    }
    let config = PmnConfig {
        num_labels,
        embed_dim,
        seq_len,
        hops,
        epsilon,
        lambda,
        dropout,
        attention,
        variant,
        conv_channels,
        conv_widths,
    };
    config.validate()?;

    let epoch = r.u32("epoch")?;
    let valid_auroc = r.f64("valid_auroc")?;

    let count = r.u32("param count")? as usize;
    let mut arrays: Vec<(String, Tensor<f32>)> = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = r.u32("name length")? as usize;
        let name = String::from_utf8(r.take(name_len, "name")?.to_vec())
            .map_err(|_| ModelError::Format("parameter name is not UTF-8".into()))?;
        let rank = r.u32("rank")? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(r.u64("dim")? as usize);
        }
        let numel: usize = dims.iter().product();
        let raw = r.take(numel * 4, "values")?;
        let values: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let tensor = Tensor::new(dims, values, true)
            .map_err(|e| ModelError::Format(format!("parameter {name}: {e}")))?;
        arrays.push((name, tensor));
    }
    if r.at != body_len {
        return Err(ModelError::Format(format!(
            "{} unread bytes after parameters",
            body_len - r.at
        )));
    }

    let params = assemble(&config, arrays)?;
    Ok(Checkpoint {
        config,
        params,
        meta: CheckpointMeta { epoch, valid_auroc },
    })
}

/// Rebuilds the parameter struct, verifying names and shapes against what
/// the configuration demands.
fn assemble(cfg: &PmnConfig, arrays: Vec<(String, Tensor<f32>)>) -> Result<ModelParams<f32>, ModelError> {
    let skeleton = ModelParams::<f32>::init(cfg, 0)?;
    let expected: Vec<(&'static str, Vec<usize>)> = skeleton
        .named()
        .iter()
        .map(|(n, t)| (*n, t.shape().to_vec()))
        .collect();
    if arrays.len() != expected.len() {
        return Err(ModelError::Format(format!(
            "{} parameter arrays, configuration demands {}",
            arrays.len(),
            expected.len()
        )));
    }
    let mut by_name: std::collections::HashMap<String, Tensor<f32>> = arrays.into_iter().collect();
    let mut params = skeleton;
    for (name, slot) in params.named_mut() {
        let found = by_name
            .remove(name)
            .ok_or_else(|| ModelError::Format(format!("missing parameter {name}")))?;
        let want = expected
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, s)| s.clone())
            .expect("expected names cover named_mut");
        if found.shape() != want.as_slice() {
            return Err(ModelError::Format(format!(
                "parameter {name}: shape {:?} does not match configuration {:?}",
                found.shape(),
                want
            )));
        }
        *slot = found;
    }
    if let Some(stray) = by_name.keys().next() {
        return Err(ModelError::Format(format!("unexpected parameter {stray}")));
    }
    Ok(params)
}

/// Writes the checkpoint and its `<path>.manifest` sidecar.
pub fn save_checkpoint<F: Element>(
    path: &Path,
    cfg: &PmnConfig,
    params: &ModelParams<F>,
    meta: &CheckpointMeta,
) -> Result<(), ModelError> {
    let bytes = encode(cfg, params, meta);
    fs::write(path, &bytes)?;

    let mut manifest = String::new();
    manifest.push_str(&format!("format_version {FORMAT_VERSION}\n"));
    manifest.push_str(&format!("epoch {}\n", meta.epoch));
    manifest.push_str(&format!("valid_auroc {:.6}\n", meta.valid_auroc));
    for (name, tensor) in params.named() {
        let dims: Vec<String> = tensor.shape().iter().map(|d| d.to_string()).collect();
        manifest.push_str(&format!("param {name} {}\n", dims.join("x")));
    }
    let mut manifest_path = path.as_os_str().to_owned();
    manifest_path.push(".manifest");
    fs::write(manifest_path, manifest)?;
    Ok(())
}

/// Reads and validates a checkpoint file.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, ModelError> {
    let bytes = fs::read(path)?;
    decode(&bytes)
}

impl Checkpoint {
    /// Parameters converted to the requested element type.
    pub fn params_as<F: Element>(&self) -> ModelParams<F> {
        self.params.cast()
    }
}

/// Rebuilds checkpoint bytes to only keep `params`/`meta` changes out of
/// callers: convenience used by round-trip tests.
pub fn roundtrip_equal<F: Element>(cfg: &PmnConfig, params: &ModelParams<F>) -> Result<bool, ModelError> {
    let meta = CheckpointMeta { epoch: 0, valid_auroc: 0.0 };
    let loaded = decode(&encode(cfg, params, &meta))?;
    let original: Vec<f32> = params
        .named()
        .iter()
        .flat_map(|(_, t)| t.values().iter().map(|v| v.to_f64_c() as f32))
        .collect();
    let restored: Vec<f32> = loaded
        .params
        .named()
        .iter()
        .flat_map(|(_, t)| t.values().iter().copied())
        .collect();
    Ok(original.len() == restored.len()
        && original
            .iter()
            .zip(&restored)
            .all(|(a, b)| a.to_bits() == b.to_bits()))
}
