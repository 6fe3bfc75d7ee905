//! Token-dump file formats: the `ATPK` little-endian binary layout and its JSON mirror.
//!
//! Real-valued fields are stored as 32-bit floats in both formats; grids are
//! widened to the caller's scalar type on read.

mod binary;
mod json;

use std::fs;
use std::path::Path;
use std::str::FromStr;

pub use binary::{decode_binary, encode_binary, FLAG_EXTENDED, FORMAT_VERSION, MAGIC};
pub use json::{decode_json, encode_json, JsonDump};

use crate::error::{Error, Result};
use crate::grid::TokenGrid;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpFormat {
    Binary,
    Json,
}

impl DumpFormat {
    /// `.json` files are JSON, everything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => DumpFormat::Json,
            _ => DumpFormat::Binary,
        }
    }
}

impl FromStr for DumpFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" | "bin" | "atpk" => Ok(DumpFormat::Binary),
            "json" => Ok(DumpFormat::Json),
            _ => Err(Error::validation(
                "format",
                format!("unknown dump format {s:?} (binary, json)"),
            )),
        }
    }
}

pub fn encode<T: Scalar>(grid: &TokenGrid<T>, format: DumpFormat) -> Result<Vec<u8>> {
    match format {
        DumpFormat::Binary => encode_binary(grid),
        DumpFormat::Json => encode_json(grid),
    }
}

pub fn decode<T: Scalar>(bytes: &[u8], format: DumpFormat) -> Result<TokenGrid<T>> {
    match format {
        DumpFormat::Binary => decode_binary(bytes),
        DumpFormat::Json => decode_json(bytes),
    }
}

/// Writes `grid` to `path`, returning the number of bytes written.
pub fn write_dump<T: Scalar>(
    grid: &TokenGrid<T>,
    format: DumpFormat,
    path: impl AsRef<Path>,
) -> Result<usize> {
    let bytes = encode(grid, format)?;
    fs::write(path, &bytes)?;
    Ok(bytes.len())
}

pub fn read_dump<T: Scalar>(path: impl AsRef<Path>, format: DumpFormat) -> Result<TokenGrid<T>> {
    decode(&fs::read(path)?, format)
}

/// Narrows to the on-disk 32-bit representation.
fn narrow<T: Scalar>(field: &'static str, values: &[T]) -> Result<Vec<f32>> {
    values
        .iter()
        .map(|v| {
            let x = v.to_f64_lossless() as f32;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::validation(
                    field,
                    format!("value {v} is not representable as a finite f32"),
                ))
            }
        })
        .collect()
}

fn widen<T: Scalar>(values: &[f32]) -> Vec<T> {
    values.iter().map(|&x| T::from_f32_exact(x)).collect()
}
