//! Two-modality datasets: a JSON header plus a byte mask and two f64 blocks
//! (subject-major, masked voxels in lattice scan order with the last axis
//! fastest).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tcgp_core::{GridDomain, ImageDataset};

use super::{mask_bytes, mask_from_bytes, read_f64le, read_json, sibling, write_f64le, write_json, F64LE};
use crate::error::{CliError, Result};

pub const SUBJECT_MAJOR: &str = "subject-major";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub dims: Vec<usize>,
    pub n: usize,
    pub mask_file: String,
    pub y1_file: String,
    pub y2_file: String,
    pub dtype: String,
    pub order: String,
}

/// Writes `{dir}/{name}.json` and its three data files; returns the header
/// path.
pub fn write_dataset(dir: &Path, name: &str, grid: &GridDomain, ds: &ImageDataset) -> Result<PathBuf> {
    let header = DatasetHeader {
        dims: grid.dims().to_vec(),
        n: ds.n(),
        mask_file: format!("{name}.mask"),
        y1_file: format!("{name}.y1.f64"),
        y2_file: format!("{name}.y2.f64"),
        dtype: F64LE.into(),
        order: SUBJECT_MAJOR.into(),
    };
    let path = dir.join(format!("{name}.json"));
    let mask = dir.join(&header.mask_file);
    fs::write(&mask, mask_bytes(grid.mask())).map_err(|e| CliError::io(&mask, e))?;
    write_f64le(&dir.join(&header.y1_file), ds.y1())?;
    write_f64le(&dir.join(&header.y2_file), ds.y2())?;
    write_json(&path, &header)?;
    Ok(path)
}

pub fn read_dataset(header_path: &Path) -> Result<(GridDomain, ImageDataset)> {
    let h: DatasetHeader = read_json(header_path)?;
    if h.dtype != F64LE {
        return Err(CliError::Data(format!("unsupported dtype {:?}", h.dtype)));
    }
    if h.order != SUBJECT_MAJOR {
        return Err(CliError::Data(format!("unsupported order {:?}", h.order)));
    }
    let lattice: usize = h.dims.iter().product();
    let mask_path = sibling(header_path, &h.mask_file);
    let bytes = fs::read(&mask_path).map_err(|e| CliError::io(&mask_path, e))?;
    if bytes.len() != lattice {
        return Err(CliError::Data(format!(
            "{}: mask has {} entries, dims {:?} need {lattice}",
            mask_path.display(),
            bytes.len(),
            h.dims
        )));
    }
    let grid = GridDomain::with_mask(&h.dims, mask_from_bytes(&bytes, &mask_path)?).map_err(CliError::from)?;
    let len = h.n * grid.m();
    let y1 = read_f64le(&sibling(header_path, &h.y1_file), len)?;
    let y2 = read_f64le(&sibling(header_path, &h.y2_file), len)?;
    let ds = ImageDataset::new(h.n, grid.m(), y1, y2)?;
    Ok((grid, ds))
}
