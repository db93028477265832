//! File formats.
//!
//! `TNSR 1` text tensors:
//!
//! ```text
//! TNSR 1
//! dims p1 p2 p3
//! v_1 v_2 ... v_{p1 p2 p3}      (canonical order, any whitespace)
//! ```
//!
//! `TREG` v1 binary regression samples, little-endian: magic `TREG`, `u32`
//! version 1, `u64` n, `u64` p1, p2, p3, then `n` records of `f64` response
//! followed by `p1 p2 p3` `f64` design values in canonical order.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::regression::RegressionData;
use crate::tensor::Tensor3;

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Upper bound on entries accepted from a single file.
pub const MAX_ENTRIES: usize = 1 << 31;

fn checked_len(dims: [usize; 3]) -> Result<usize> {
    if dims.contains(&0) {
        return Err(fmt_err(format!("dimensions must be positive, got {dims:?}")));
    }
    dims[0]
        .checked_mul(dims[1])
        .and_then(|v| v.checked_mul(dims[2]))
        .filter(|&v| v <= MAX_ENTRIES)
        .ok_or_else(|| fmt_err(format!("dimensions {dims:?} are too large")))
}

/// Parses a `TNSR 1` document.
pub fn parse_tnsr(text: &str) -> Result<Tensor3> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| fmt_err("empty input"))?;
    let mut h = header.split_whitespace();
    if h.next() != Some("TNSR") || h.next() != Some("1") || h.next().is_some() {
        return Err(fmt_err(format!("expected header `TNSR 1`, found {header:?}")));
    }
    let dims_line = lines.next().ok_or_else(|| fmt_err("missing dims line"))?;
    let mut d = dims_line.split_whitespace();
    if d.next() != Some("dims") {
        return Err(fmt_err(format!("expected `dims p1 p2 p3`, found {dims_line:?}")));
    }
    let mut dims = [0usize; 3];
    for slot in dims.iter_mut() {
        let tok = d.next().ok_or_else(|| fmt_err("dims line needs three values"))?;
        *slot = tok
            .parse()
            .map_err(|_| fmt_err(format!("bad dimension {tok:?}")))?;
    }
    if d.next().is_some() {
        return Err(fmt_err("dims line has more than three values"));
    }
    let len = checked_len(dims)?;
    let mut values = Vec::new();
    for line in lines {
        for tok in line.split_whitespace() {
            if values.len() == len {
                return Err(fmt_err(format!("more than {len} values")));
            }
            let v: f64 = tok
                .parse()
                .map_err(|_| fmt_err(format!("bad value {tok:?}")))?;
            if !v.is_finite() {
                return Err(fmt_err(format!("non-finite value {tok:?}")));
            }
            values.push(v);
        }
    }
    if values.len() != len {
        return Err(fmt_err(format!("expected {len} values, found {}", values.len())));
    }
    Tensor3::from_vec(dims, values)
}

/// Parses raw bytes as a `TNSR 1` document.
pub fn parse_tnsr_bytes(bytes: &[u8]) -> Result<Tensor3> {
    let text = std::str::from_utf8(bytes).map_err(|_| fmt_err("input is not UTF-8"))?;
    parse_tnsr(text)
}

/// Formats with 17 significant digits, one slice along mode 1 per line.
pub fn write_tnsr(t: &Tensor3) -> String {
    let [p1, p2, p3] = t.dims();
    let mut out = format!("TNSR 1\ndims {p1} {p2} {p3}\n");
    for row in t.as_slice().chunks(p1) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{v:.16e}").expect("write to String");
        }
        out.push('\n');
    }
    out
}

pub fn read_tnsr(path: impl AsRef<Path>) -> Result<Tensor3> {
    parse_tnsr_bytes(&std::fs::read(path)?)
}

pub fn save_tnsr(path: impl AsRef<Path>, t: &Tensor3) -> Result<()> {
    std::fs::write(path, write_tnsr(t))?;
    Ok(())
}

const TREG_MAGIC: &[u8; 4] = b"TREG";
const TREG_HEADER: usize = 4 + 4 + 8 * 4;

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
            .ok_or_else(|| fmt_err("unexpected end of input"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn to_usize(v: u64, what: &str) -> Result<usize> {
    usize::try_from(v).map_err(|_| fmt_err(format!("{what} {v} does not fit in memory")))
}

/// Decodes a `TREG` v1 buffer.
pub fn decode_treg(bytes: &[u8]) -> Result<RegressionData> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != TREG_MAGIC {
        return Err(fmt_err("missing TREG magic"));
    }
    let version = r.u32()?;
    if version != 1 {
        return Err(fmt_err(format!("unsupported TREG version {version}")));
    }
    let n = to_usize(r.u64()?, "sample count")?;
    let dims = [
        to_usize(r.u64()?, "dimension")?,
        to_usize(r.u64()?, "dimension")?,
        to_usize(r.u64()?, "dimension")?,
    ];
    if n == 0 {
        return Err(fmt_err("sample count must be positive"));
    }
    let p = checked_len(dims)?;
    let record = p
        .checked_add(1)
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| fmt_err("record size overflows"))?;
    let body = n
        .checked_mul(record)
        .ok_or_else(|| fmt_err("payload size overflows"))?;
    let remaining = bytes.len() - TREG_HEADER;
    if body != remaining {
        return Err(fmt_err(format!(
            "payload has {remaining} bytes, header implies {body}"
        )));
    }
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n * p);
    let le = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8 bytes"));
    for rec in r.take(body)?.chunks_exact(record) {
        y.push(le(&rec[..8]));
        x.extend(rec[8..].chunks_exact(8).map(le));
    }
    if y.iter().chain(&x).any(|v| !v.is_finite()) {
        return Err(fmt_err("non-finite value in payload"));
    }
    RegressionData::new(dims, y, x)
}

/// Encodes regression samples as `TREG` v1.
pub fn encode_treg(data: &RegressionData) -> Vec<u8> {
    let dims = data.dims();
    let p = dims[0] * dims[1] * dims[2];
    let mut out = Vec::with_capacity(TREG_HEADER + data.n() * (p + 1) * 8);
    out.extend_from_slice(TREG_MAGIC);
    out.extend_from_slice(&1u32.to_le_bytes());
    out.extend_from_slice(&(data.n() as u64).to_le_bytes());
    for d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    let x = data.designs();
    for (i, yi) in data.responses().iter().enumerate() {
        out.extend_from_slice(&yi.to_le_bytes());
        for v in &x[i * p..(i + 1) * p] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_treg(path: impl AsRef<Path>) -> Result<RegressionData> {
    decode_treg(&std::fs::read(path)?)
}

pub fn save_treg(path: impl AsRef<Path>, data: &RegressionData) -> Result<()> {
    std::fs::write(path, encode_treg(data))?;
    Ok(())
}
