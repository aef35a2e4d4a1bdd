//! Checkpoint file, little-endian:
//!
//! ```text
//! "SYMT" | version u32 | config sha256 [32] | config len u64 | config TOML
//! epoch u64 | adam step u64 | tensor count u32
//! per tensor: name len u32 | name | ndim u32 | dims u64… | params f64… | m f64… | v f64…
//! ```

use std::io::Write;
use std::path::Path;

use super::{init_params, AdamState, ModelParams, TrainConfig};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"SYMT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    /// Number of completed epochs.
    pub epoch: u64,
    pub params: ModelParams,
    pub adam: AdamState,
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let toml = ck.config.to_toml();
    let mut buf = Vec::new();
    buf.extend_from_slice(&CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&ck.config.hash());
    buf.extend_from_slice(&(toml.len() as u64).to_le_bytes());
    buf.extend_from_slice(toml.as_bytes());
    buf.extend_from_slice(&ck.epoch.to_le_bytes());
    buf.extend_from_slice(&ck.adam.step.to_le_bytes());
    let p = ck.params.tensors();
    let m = ck.adam.m.tensors();
    let v = ck.adam.v.tensors();
    buf.extend_from_slice(&(p.len() as u32).to_le_bytes());
    for ((name, shape, values), (_, _, mv), (_, _, vv)) in p.iter().zip(&m).zip(&v).map(|((a, b), c)| (a, b, c)) {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for &s in shape {
            buf.extend_from_slice(&(s as u64).to_le_bytes());
        }
        for x in values.iter().chain(mv.iter()).chain(vv.iter()) {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("truncated checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("tensor too large".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

struct RawTensor {
    name: String,
    shape: Vec<usize>,
    params: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let hash: [u8; 32] = r.take(32)?.try_into().unwrap();
    let toml_len = r.u64()? as usize;
    let toml = std::str::from_utf8(r.take(toml_len)?)
        .map_err(|_| Error::Format("checkpoint config is not UTF-8".into()))?;
    let config = TrainConfig::from_toml(toml)?;
    if config.hash() != hash {
        return Err(Error::Format("checkpoint config does not match its stored hash".into()));
    }
    let epoch = r.u64()?;
    let step = r.u64()?;
    let count = r.u32()? as usize;
    let mut raw = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
        let ndim = r.u32()? as usize;
        let shape = (0..ndim).map(|_| r.u64().map(|x| x as usize)).collect::<Result<Vec<_>>>()?;
        let n = shape.iter().product();
        raw.push(RawTensor {
            name,
            params: r.f64s(n)?,
            m: r.f64s(n)?,
            v: r.f64s(n)?,
            shape,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after checkpoint".into()));
    }

    let shape_of = |name: &str| -> Result<&Vec<usize>> {
        raw.iter()
            .find(|t| t.name == name)
            .map(|t| &t.shape)
            .ok_or_else(|| Error::Format(format!("checkpoint lacks tensor {name}")))
    };
    let emb = shape_of("embedding")?;
    let proj = shape_of("projection.weight")?;
    if emb.len() != 2 || proj.len() != 2 {
        return Err(Error::Format("malformed tensor shapes".into()));
    }
    let mut params = init_params(&config, emb[0], proj[0], 0);
    let mut m = params.zeros_like();
    let mut v = params.zeros_like();
    {
        let template = params.tensors().into_iter().map(|(n, s, _)| (n, s)).collect::<Vec<_>>();
        if template.len() != raw.len() {
            return Err(Error::Format(format!(
                "checkpoint holds {} tensors, config implies {}",
                raw.len(),
                template.len()
            )));
        }
        for ((name, shape), t) in template.iter().zip(&raw) {
            if *name != t.name || *shape != t.shape {
                return Err(Error::Format(format!(
                    "tensor {} {:?} does not match expected {} {:?}",
                    t.name, t.shape, name, shape
                )));
            }
        }
    }
    for (dst, t) in params.tensors_mut().into_iter().zip(&raw) {
        dst.1.copy_from_slice(&t.params);
    }
    for (dst, t) in m.tensors_mut().into_iter().zip(&raw) {
        dst.1.copy_from_slice(&t.m);
    }
    for (dst, t) in v.tensors_mut().into_iter().zip(&raw) {
        dst.1.copy_from_slice(&t.v);
    }
    Ok(Checkpoint {
        config,
        epoch,
        params,
        adam: AdamState { step, m, v },
    })
}

/// Writes to a temporary file in the target directory, then renames.
pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(&encode_checkpoint(ck)).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
