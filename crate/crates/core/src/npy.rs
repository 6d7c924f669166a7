//! Minimal reader/writer for the NPY 1.0 container, restricted to
//! little-endian `float32` arrays in C order with one or two dimensions.
//!
//! One-dimensional files are read as a single column.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::{Error, Result, Scalar};

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
const PREAMBLE: usize = 10;
const ALIGN: usize = 64;

/// Encodes a matrix as NPY 1.0 bytes.
pub fn encode(array: ArrayView2<'_, f32>) -> Vec<u8> {
    let (rows, cols) = array.dim();
    let dict = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': ({rows}, {cols}), }}");
    // Header (dict + padding + '\n') is padded so the data starts on a 64-byte boundary.
    let unpadded = PREAMBLE + dict.len() + 1;
    let header_len = dict.len() + 1 + (ALIGN - unpadded % ALIGN) % ALIGN;

    let mut out = Vec::with_capacity(PREAMBLE + header_len + rows * cols * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header_len as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.resize(PREAMBLE + header_len - 1, b' ');
    out.push(b'\n');
    for v in array.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes NPY bytes produced by [`encode`] or by numpy for `<f4` arrays.
pub fn decode(bytes: &[u8]) -> Result<Array2<f32>> {
    if bytes.len() < PREAMBLE || &bytes[..6] != MAGIC {
        return Err(Error::format("missing NPY magic"));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(Error::format(format!("unsupported NPY version {major}.{minor}")));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_start = PREAMBLE + header_len;
    if bytes.len() < data_start {
        return Err(Error::format("truncated NPY header"));
    }
    let header = std::str::from_utf8(&bytes[PREAMBLE..data_start])
        .map_err(|_| Error::format("NPY header is not ASCII"))?;
    let (rows, cols) = parse_header(header)?;

    let body = &bytes[data_start..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format("NPY shape overflows"))?;
    if body.len() != expected {
        return Err(Error::format(format!(
            "NPY payload has {} bytes, shape ({rows}, {cols}) needs {expected}",
            body.len()
        )));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::format(e.to_string()))
}

fn dict_value<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let needle = format!("'{key}':");
    let start = header
        .find(&needle)
        .ok_or_else(|| Error::format(format!("NPY header lacks '{key}'")))?
        + needle.len();
    Ok(header[start..].trim_start())
}

fn parse_header(header: &str) -> Result<(usize, usize)> {
    let descr = dict_value(header, "descr")?;
    if !descr.starts_with("'<f4'") {
        return Err(Error::format("only little-endian float32 NPY arrays are supported"));
    }
    if !dict_value(header, "fortran_order")?.starts_with("False") {
        return Err(Error::format("Fortran-order NPY arrays are not supported"));
    }
    let shape = dict_value(header, "shape")?;
    let inner = shape
        .strip_prefix('(')
        .and_then(|s| s.split(')').next())
        .ok_or_else(|| Error::format("malformed NPY shape"))?;
    let dims = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| Error::format(format!("bad NPY dimension '{s}'"))))
        .collect::<Result<Vec<_>>>()?;
    match dims[..] {
        [n] => Ok((n, 1)),
        [r, c] => Ok((r, c)),
        _ => Err(Error::format(format!("expected a 1-D or 2-D NPY array, got {} dims", dims.len()))),
    }
}

/// Writes a `float32` matrix, replacing `path` atomically.
pub fn write(path: &Path, array: ArrayView2<'_, f32>) -> Result<()> {
    let tmp = path.with_extension("npy.partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&encode(array))?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Array2<f32>> {
    decode(&fs::read(path)?)
}

/// Narrows to `float32` and writes.
pub fn write_matrix<T: Scalar>(path: &Path, m: ArrayView2<'_, T>) -> Result<()> {
    write(path, m.mapv(|v| v.f64() as f32).view())
}

/// Reads and widens to `T`.
pub fn read_matrix<T: Scalar>(path: &Path) -> Result<Array2<T>> {
    Ok(read(path)?.mapv(|v| T::of(v as f64)))
}
