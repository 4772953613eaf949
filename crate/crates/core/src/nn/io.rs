//! Binary ParamSet encoding.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic      4 bytes  "NDPS"
//! version    u32      1
//! init_seed  u64
//! count      u32      number of tensors
//! per tensor:
//!   name_len u32, name (UTF-8, name_len bytes)
//!   ndim     u32, dims (u64 x ndim)
//!   values   f64 x product(dims)
//! ```
//!
//! Nothing may follow the last tensor.

use super::net::{NamedTensor, ParamSet};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NDPS";
pub const VERSION: u32 = 1;

const MAX_NAME: usize = 4096;
const MAX_NDIM: usize = 8;

pub fn encode(params: &ParamSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + params.scalar_count() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&params.init_seed.to_le_bytes());
    out.extend_from_slice(&(params.entries.len() as u32).to_le_bytes());
    for e in &params.entries {
        out.extend_from_slice(&(e.name.len() as u32).to_le_bytes());
        out.extend_from_slice(e.name.as_bytes());
        out.extend_from_slice(&(e.tensor.shape().len() as u32).to_le_bytes());
        for &d in e.tensor.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in e.tensor.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::load(format!("truncated parameter file at byte {}", self.pos))),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

pub fn decode(bytes: &[u8]) -> Result<ParamSet> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::load("bad parameter file magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::load(format!("unsupported parameter file version {version}")));
    }
    let init_seed = r.u64()?;
    let count = r.u32()? as usize;
    let mut entries = Vec::new();
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        if name_len > MAX_NAME {
            return Err(Error::load("tensor name too long"));
        }
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::load("tensor name is not UTF-8"))?
            .to_string();
        let ndim = r.u32()? as usize;
        if ndim == 0 || ndim > MAX_NDIM {
            return Err(Error::load(format!("tensor `{name}` has unsupported rank {ndim}")));
        }
        let mut shape = Vec::with_capacity(ndim);
        let mut n: usize = 1;
        for _ in 0..ndim {
            let d = usize::try_from(r.u64()?).map_err(|_| Error::load("dimension overflow"))?;
            n = n.checked_mul(d).ok_or_else(|| Error::load("dimension overflow"))?;
            shape.push(d);
        }
        if n.checked_mul(8).map_or(true, |b| b > r.remaining()) {
            return Err(Error::load(format!("tensor `{name}` exceeds the remaining file")));
        }
        let raw = r.take(n * 8)?;
        let values: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::load(format!("tensor `{name}` holds non-finite values")));
        }
        let tensor = Tensor::new(shape, values).map_err(|e| Error::load(e.to_string()))?;
        entries.push(NamedTensor { name, tensor });
    }
    if r.remaining() != 0 {
        return Err(Error::load("trailing bytes after last tensor"));
    }
    Ok(ParamSet { entries, init_seed })
}

pub fn save(params: &ParamSet, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, encode(params))?;
    Ok(())
}

pub fn load(path: &std::path::Path) -> Result<ParamSet> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, NetSpec};
    use proptest::prelude::*;

    #[test]
    fn layout_is_little_endian() {
        let p = ParamSet {
            entries: vec![NamedTensor { name: "a".into(), tensor: Tensor::new(vec![1], vec![1.0]).unwrap() }],
            init_seed: 3,
        };
        let bytes = encode(&p);
        assert_eq!(&bytes[..4], b"NDPS");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..16], &[3, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[bytes.len() - 8..], &1.0f64.to_le_bytes());
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode(b"").is_err());
        assert!(decode(b"NDPS\x02\0\0\0").is_err());
        let spec = NetSpec::mlp(vec![2, 2], Activation::Relu, Activation::Identity).unwrap();
        let mut bytes = encode(&ParamSet::init(&spec, 1));
        bytes.push(0);
        assert!(decode(&bytes).is_err());
        bytes.truncate(bytes.len() - 9);
        assert!(decode(&bytes).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip(widths in prop::collection::vec(1usize..6, 2..5), seed in any::<u64>()) {
            let spec = NetSpec::mlp(widths, Activation::Tanh, Activation::Identity).unwrap();
            let p = ParamSet::init(&spec, seed);
            prop_assert_eq!(decode(&encode(&p)).unwrap(), p);
        }

        #[test]
        fn decode_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
            let _ = decode(&bytes);
        }
    }
}
