//! Binary checkpoint format (all integers and floats little-endian):
//!
//! ```text
//! "RISU"                    4 bytes magic
//! version                   u32 (= 1)
//! D, L                      u32, u32
//! per layer:
//!   delta1, delta2, delta3  f64
//!   weight                  D·D f64, row-major
//!   bias                    D f64
//! checksum                  u64, wrapping sum of every f64 payload value's
//!                           bit pattern read as a u64
//! ```

use std::fs;
use std::path::Path;

use super::{LayerParams, UnfoldingParams};
use crate::{Error, RMatrix, RVector, Result};

pub const MAGIC: &[u8; 4] = b"RISU";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 16;

fn payload_len(dim: usize, layers: usize) -> usize {
    layers * 8 * (3 + dim * dim + dim)
}

pub fn to_bytes(params: &UnfoldingParams) -> Vec<u8> {
    let d = params.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + payload_len(d, params.num_layers()) + 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.extend_from_slice(&(params.num_layers() as u32).to_le_bytes());

    let mut checksum = 0u64;
    let mut put = |out: &mut Vec<u8>, x: f64| {
        checksum = checksum.wrapping_add(x.to_bits());
        out.extend_from_slice(&x.to_le_bytes());
    };
    for layer in &params.layers {
        put(&mut out, layer.delta1);
        put(&mut out, layer.delta2);
        put(&mut out, layer.delta3);
        for r in 0..d {
            for c in 0..d {
                put(&mut out, layer.weight[(r, c)]);
            }
        }
        for &b in layer.bias.iter() {
            put(&mut out, b);
        }
    }
    out.extend_from_slice(&checksum.to_le_bytes());
    out
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn from_bytes(bytes: &[u8]) -> Result<UnfoldingParams> {
    if bytes.len() < HEADER_LEN + 8 {
        return Err(corrupt("file too short"));
    }
    if &bytes[..4] != MAGIC {
        return Err(corrupt("bad magic bytes"));
    }
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != FORMAT_VERSION {
        return Err(corrupt(format!("unsupported format version {version}")));
    }
    let d = u32_at(8) as usize;
    let l = u32_at(12) as usize;
    if d == 0 || l == 0 {
        return Err(corrupt("zero dimension or layer count"));
    }
    let expected = HEADER_LEN + payload_len(d, l) + 8;
    if bytes.len() != expected {
        return Err(corrupt(format!(
            "expected {expected} bytes for D = {d}, L = {l}, found {}",
            bytes.len()
        )));
    }

    let payload = &bytes[HEADER_LEN..expected - 8];
    let stored = u64::from_le_bytes(bytes[expected - 8..].try_into().unwrap());
    let mut checksum = 0u64;
    let mut values = payload.chunks_exact(8).map(|c| {
        let bits = u64::from_le_bytes(c.try_into().unwrap());
        checksum = checksum.wrapping_add(bits);
        f64::from_bits(bits)
    });
    let mut layers = Vec::with_capacity(l);
    for _ in 0..l {
        let mut next = || values.next().expect("length checked above");
        let delta1 = next();
        let delta2 = next();
        let delta3 = next();
        let weight = RMatrix::from_row_iterator(d, d, (0..d * d).map(|_| next()));
        let bias = RVector::from_iterator(d, (0..d).map(|_| next()));
        layers.push(LayerParams {
            delta1,
            delta2,
            delta3,
            weight,
            bias,
        });
    }
    drop(values);
    if checksum != stored {
        return Err(corrupt(format!(
            "checksum mismatch (stored {stored:#018x}, computed {checksum:#018x})"
        )));
    }
    UnfoldingParams::new(layers)
}

pub fn save(params: &UnfoldingParams, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(params))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<UnfoldingParams> {
    from_bytes(&fs::read(path)?)
}
