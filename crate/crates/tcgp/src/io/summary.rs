use std::path::Path;

use serde::{Deserialize, Serialize};
use tcgp_core::analysis::PosteriorSummary;
use tcgp_core::GridDomain;

use super::{mask_bytes, mask_from_bytes, read_json, write_json};
use crate::error::{CliError, Result};

pub const SUMMARY_VERSION: u32 = 1;

/// Per-voxel summary together with the grid it lives on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryFile {
    pub version: u32,
    pub dims: Vec<usize>,
    /// One 0/1 entry per lattice point.
    pub mask: Vec<u8>,
    pub pip_threshold: f64,
    pub pip_plus: Vec<f64>,
    pub pip_minus: Vec<f64>,
    pub mean_rho: Vec<f64>,
    pub sd_rho: Vec<f64>,
    pub sign_map: Vec<i8>,
}

impl SummaryFile {
    pub fn new(grid: &GridDomain, s: &PosteriorSummary, pip_threshold: f64) -> Self {
        Self {
            version: SUMMARY_VERSION,
            dims: grid.dims().to_vec(),
            mask: mask_bytes(grid.mask()),
            pip_threshold,
            pip_plus: s.pip_plus.clone(),
            pip_minus: s.pip_minus.clone(),
            mean_rho: s.mean_rho.clone(),
            sd_rho: s.sd_rho.clone(),
            sign_map: s.sign_map.clone(),
        }
    }

    pub fn grid(&self) -> Result<GridDomain> {
        let mask = mask_from_bytes(&self.mask, Path::new("summary mask"))?;
        Ok(GridDomain::with_mask(&self.dims, mask)?)
    }

    pub fn summary(&self) -> PosteriorSummary {
        PosteriorSummary {
            pip_plus: self.pip_plus.clone(),
            pip_minus: self.pip_minus.clone(),
            mean_rho: self.mean_rho.clone(),
            sd_rho: self.sd_rho.clone(),
            sign_map: self.sign_map.clone(),
        }
    }
}

pub fn write_summary(path: &Path, s: &SummaryFile) -> Result<()> {
    write_json(path, s)
}

/// Reads a summary and checks the per-voxel arrays agree with the mask.
pub fn read_summary(path: &Path) -> Result<(GridDomain, SummaryFile)> {
    let s: SummaryFile = read_json(path)?;
    if s.version != SUMMARY_VERSION {
        return Err(CliError::Data(format!("{}: unsupported version {}", path.display(), s.version)));
    }
    let grid = s.grid()?;
    let m = grid.m();
    let lens = [s.pip_plus.len(), s.pip_minus.len(), s.mean_rho.len(), s.sd_rho.len(), s.sign_map.len()];
    if lens.iter().any(|&l| l != m) {
        return Err(CliError::Data(format!(
            "{}: per-voxel arrays have lengths {lens:?}, the mask selects {m} voxels",
            path.display()
        )));
    }
    Ok((grid, s))
}
