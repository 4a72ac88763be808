//! OMST binary tensor format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "OMST" | u32 version = 1 | u32 dtype (0 = f32) | u32 ndim | ndim x u64 extent | payload
//! ```
//!
//! The payload is `product(extents)` little-endian `f32` values in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MAGIC: [u8; 4] = *b"OMST";
pub const VERSION: u32 = 1;
pub const DTYPE_F32: u32 = 0;

const PREFIX_LEN: usize = 16;

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes)
}

pub fn write_tensor(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_tensor(t)).map_err(|e| Error::io(path, e))
}

pub fn encode_tensor(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(PREFIX_LEN + 8 * t.ndim() + 4 * t.numel());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&DTYPE_F32.to_le_bytes());
    out.extend_from_slice(&(t.ndim() as u32).to_le_bytes());
    for &extent in t.shape() {
        out.extend_from_slice(&(extent as u64).to_le_bytes());
    }
    for &x in t.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            expected: PREFIX_LEN,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    if bytes.len() < PREFIX_LEN {
        return Err(Error::Truncated {
            expected: PREFIX_LEN,
            found: bytes.len(),
        });
    }
    let version = read_u32(bytes, 4);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dtype = read_u32(bytes, 8);
    if dtype != DTYPE_F32 {
        return Err(Error::UnsupportedDtype(dtype));
    }
    let ndim = read_u32(bytes, 12) as usize;

    let header_len = ndim
        .checked_mul(8)
        .and_then(|n| n.checked_add(PREFIX_LEN))
        .ok_or_else(|| Error::Shape(format!("ndim {ndim} too large")))?;
    if bytes.len() < header_len {
        return Err(Error::Truncated {
            expected: header_len,
            found: bytes.len(),
        });
    }
    let mut shape = Vec::with_capacity(ndim);
    for d in 0..ndim {
        let off = PREFIX_LEN + 8 * d;
        let extent = u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let extent = usize::try_from(extent)
            .map_err(|_| Error::Shape(format!("extent {extent} exceeds usize")))?;
        shape.push(extent);
    }

    let numel = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Shape(format!("shape {shape:?} overflows usize")))?;
    let expected = numel
        .checked_mul(4)
        .and_then(|n| n.checked_add(header_len))
        .ok_or_else(|| Error::Shape(format!("shape {shape:?} overflows usize")))?;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::TrailingBytes {
            extra: bytes.len() - expected,
        });
    }

    let data = bytes[header_len..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor::new(shape, data)
}

fn read_u32(bytes: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap())
}
