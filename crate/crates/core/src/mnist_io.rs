//! Reader and writer for the IDX binary format used by the MNIST database.
//!
//! Layout, bit-exact: offsets 0-1 are zero bytes, offset 2 is the dtype
//! code, offset 3 the dimension count, then one big-endian u32 per
//! dimension, then the row-major payload. Only dtype 0x08 (unsigned byte)
//! is supported; that is the only type MNIST uses. Files whose name ends
//! in `.gz` are decompressed transparently.

use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const IDX_DTYPE_U8: u8 = 0x08;

/// A parsed IDX array: dtype code, dimension sizes, flat payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dtype: u8,
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxArray {
    pub fn new(dims: Vec<usize>, data: Vec<u8>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::IdxFormat(format!(
                "dims {:?} imply {expected} elements, payload has {}",
                dims,
                data.len()
            )));
        }
        Ok(IdxArray {
            dtype: IDX_DTYPE_U8,
            dims,
            data,
        })
    }

    pub fn n_items(&self) -> usize {
        self.dims.first().copied().unwrap_or(0)
    }

    /// Elements per item (product of the trailing dimensions).
    pub fn item_len(&self) -> usize {
        self.dims.iter().skip(1).product()
    }

    /// Image payload as rows scaled into [0,1].
    pub fn to_normalized_rows(&self) -> Result<Matrix> {
        let item = self.item_len();
        if item == 0 {
            return Err(Error::IdxFormat("scalar items have no features".into()));
        }
        let mut m = Matrix::zeros(self.n_items(), item);
        for (i, chunk) in self.data.chunks_exact(item).enumerate() {
            for (dst, &b) in m.row_mut(i).iter_mut().zip(chunk) {
                *dst = b as f64 / 255.0;
            }
        }
        Ok(m)
    }

    /// Label payload as an integer vector; requires a 1-d array.
    pub fn to_labels(&self) -> Result<Vec<u8>> {
        if self.dims.len() != 1 {
            return Err(Error::IdxFormat(format!(
                "labels must be 1-d, got dims {:?}",
                self.dims
            )));
        }
        Ok(self.data.clone())
    }
}

fn open_raw(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    let file = std::fs::File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        GzDecoder::new(file).read_to_end(&mut raw)?;
    } else {
        let mut file = file;
        file.read_to_end(&mut raw)?;
    }
    Ok(raw)
}

/// Parses an IDX file (gzip-compressed if the name says so).
pub fn read_idx(path: &Path) -> Result<IdxArray> {
    let raw = open_raw(path)?;
    parse_idx(&raw)
}

pub fn parse_idx(raw: &[u8]) -> Result<IdxArray> {
    if raw.len() < 4 {
        return Err(Error::IdxFormat("file shorter than the 4-byte magic".into()));
    }
    if raw[0] != 0 || raw[1] != 0 {
        return Err(Error::IdxFormat(format!(
            "bad magic: first bytes {:02x} {:02x}, want 00 00",
            raw[0], raw[1]
        )));
    }
    let dtype = raw[2];
    if dtype != IDX_DTYPE_U8 {
        return Err(Error::IdxFormat(format!(
            "unsupported dtype 0x{dtype:02x}; only unsigned byte (0x08) is supported"
        )));
    }
    let ndim = raw[3] as usize;
    let header_len = 4 + 4 * ndim;
    if raw.len() < header_len {
        return Err(Error::IdxFormat("truncated dimension table".into()));
    }
    let mut dims = Vec::with_capacity(ndim);
    for d in 0..ndim {
        let at = 4 + 4 * d;
        let bytes: [u8; 4] = raw[at..at + 4].try_into().unwrap();
        dims.push(u32::from_be_bytes(bytes) as usize);
    }
    let expected: usize = dims.iter().product();
    let payload = &raw[header_len..];
    if payload.len() != expected {
        return Err(Error::IdxFormat(format!(
            "dims {dims:?} imply {expected} bytes, payload has {}",
            payload.len()
        )));
    }
    Ok(IdxArray {
        dtype,
        dims,
        data: payload.to_vec(),
    })
}

/// Serializes an array back to IDX bytes; `write_idx(read_idx(f))` is
/// byte-identical to `f` for well-formed uncompressed files.
pub fn idx_bytes(arr: &IdxArray) -> Result<Vec<u8>> {
    if arr.dims.len() > u8::MAX as usize {
        return Err(Error::IdxFormat("too many dimensions".into()));
    }
    let expected: usize = arr.dims.iter().product();
    if expected != arr.data.len() {
        return Err(Error::IdxFormat("payload length does not match dims".into()));
    }
    let mut out = Vec::with_capacity(4 + 4 * arr.dims.len() + arr.data.len());
    out.extend_from_slice(&[0, 0, arr.dtype, arr.dims.len() as u8]);
    for &d in &arr.dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&arr.data);
    Ok(out)
}

pub fn write_idx(arr: &IdxArray, path: &Path) -> Result<()> {
    let bytes = idx_bytes(arr)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}
