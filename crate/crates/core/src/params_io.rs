//! Binary parameter files.
//!
//! Layout, all integers little-endian:
//!
//! | field | type |
//! |---|---|
//! | magic `b"DRNNPARM"` | 8 bytes |
//! | format version (currently 1) | u32 |
//! | order, input_dim, state_dim, output_dim | 4 × u32 |
//! | tensor count | u32 |
//!
//! followed by one record per tensor: name length (u16), UTF-8 name, rows
//! (u32), cols (u32), then `rows × cols` row-major `f64` values. Tensors
//! appear in the order of [`CellParams::tensors`]; loading matches them by
//! name.

use std::path::Path;

use crate::cell::CellParams;
use crate::error::{Error, Result};
use crate::numeric::Matrix;
use crate::write_atomic;

pub const MAGIC: &[u8; 8] = b"DRNNPARM";
pub const FORMAT_VERSION: u32 = 1;

pub fn encode_params(params: &CellParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 8 * params.len() + 32 * 24);
    out.extend_from_slice(MAGIC);
    for v in [
        FORMAT_VERSION,
        params.order() as u32,
        params.input_dim() as u32,
        params.state_dim() as u32,
        params.output_dim() as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let tensors = params.tensors();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(t.cols() as u32).to_le_bytes());
        for v in t.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::ModelFormat(format!("truncated while reading {what} at byte {}", self.pos))
        })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode_params(bytes: &[u8]) -> Result<CellParams> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err(Error::ModelFormat("bad magic, not a dRNN parameter file".into()));
    }
    let version = r.u32("format version")?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!("unsupported format version {version}")));
    }
    let order = r.u32("order")? as usize;
    let input_dim = r.u32("input_dim")? as usize;
    let state_dim = r.u32("state_dim")? as usize;
    let output_dim = r.u32("output_dim")? as usize;
    let mut params = CellParams::zeros(order, input_dim, state_dim, output_dim)?;
    let count = r.u32("tensor count")? as usize;
    let expected = params.tensors().len();
    if count != expected {
        return Err(Error::ModelFormat(format!("expected {expected} tensors, found {count}")));
    }
    let mut seen = vec![false; expected];
    for _ in 0..count {
        let len = r.u16("tensor name length")? as usize;
        let name = std::str::from_utf8(r.take(len, "tensor name")?)
            .map_err(|_| Error::ModelFormat("tensor name is not UTF-8".into()))?
            .to_string();
        let rows = r.u32("rows")? as usize;
        let cols = r.u32("cols")? as usize;
        let mut slots = params.tensors_mut();
        let idx = slots
            .iter()
            .position(|(n, _)| *n == name)
            .ok_or_else(|| Error::ModelFormat(format!("unknown tensor {name:?}")))?;
        if std::mem::replace(&mut seen[idx], true) {
            return Err(Error::ModelFormat(format!("duplicate tensor {name:?}")));
        }
        let slot = &mut slots[idx].1;
        if slot.shape() != (rows, cols) {
            return Err(Error::ModelFormat(format!(
                "tensor {name} is {rows}x{cols}, expected {}x{}",
                slot.rows(),
                slot.cols()
            )));
        }
        let values = (0..rows * cols)
            .map(|_| r.f64(&name))
            .collect::<Result<Vec<f64>>>()?;
        **slot = Matrix::from_vec(rows, cols, values)?;
    }
    if r.pos != bytes.len() {
        return Err(Error::ModelFormat(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(params)
}

pub fn save_params(params: &CellParams, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_params(params))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<CellParams> {
    decode_params(&std::fs::read(path)?)
}
