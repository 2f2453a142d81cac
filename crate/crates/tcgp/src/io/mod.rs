//! On-disk formats. Every binary block is raw little-endian f64 with no
//! header; the JSON file next to it says what it holds.

pub mod dataset;
pub mod posterior;
pub mod summary;
pub mod truth;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};

pub const F64LE: &str = "f64le";

pub fn write_f64le(path: &Path, values: &[f64]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a block and checks it holds exactly `expected` values.
pub fn read_f64le(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.len() != 8 * expected {
        return Err(CliError::Data(format!(
            "{}: expected {expected} f64 values ({} bytes), found {} bytes",
            path.display(),
            8 * expected,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::json(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Resolves a file named inside a JSON document relative to that document.
pub(crate) fn sibling(doc: &Path, name: &str) -> PathBuf {
    doc.parent().unwrap_or_else(|| Path::new(".")).join(name)
}

pub(crate) fn mask_bytes(mask: &[bool]) -> Vec<u8> {
    mask.iter().map(|&b| b as u8).collect()
}

pub(crate) fn mask_from_bytes(bytes: &[u8], what: &Path) -> Result<Vec<bool>> {
    bytes
        .iter()
        .enumerate()
        .map(|(i, &b)| match b {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(CliError::Data(format!("{}: mask byte {i} is {b}, expected 0 or 1", what.display()))),
        })
        .collect()
}
