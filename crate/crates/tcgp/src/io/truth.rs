//! Ground truth of a simulated dataset: `truth.json` with the sign map and
//! pointers to the f64 maps.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tcgp_core::simgen::SimTruth;

use super::{read_f64le, read_json, sibling, write_f64le, write_json, F64LE};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    pub dims: Vec<usize>,
    pub m: usize,
    pub dtype: String,
    pub sign: Vec<i8>,
    pub rho_file: String,
    pub sigma_plus_sq_file: String,
    pub sigma_minus_sq_file: String,
    pub tau1_sq_file: String,
    pub tau2_sq_file: String,
}

pub fn write_truth(dir: &Path, dims: &[usize], t: &SimTruth) -> Result<PathBuf> {
    let file = TruthFile {
        dims: dims.to_vec(),
        m: t.sign.len(),
        dtype: F64LE.into(),
        sign: t.sign.clone(),
        rho_file: "truth_rho.f64".into(),
        sigma_plus_sq_file: "truth_sigma_plus_sq.f64".into(),
        sigma_minus_sq_file: "truth_sigma_minus_sq.f64".into(),
        tau1_sq_file: "truth_tau1_sq.f64".into(),
        tau2_sq_file: "truth_tau2_sq.f64".into(),
    };
    write_f64le(&dir.join(&file.rho_file), &t.rho)?;
    write_f64le(&dir.join(&file.sigma_plus_sq_file), &t.sigma_plus_sq)?;
    write_f64le(&dir.join(&file.sigma_minus_sq_file), &t.sigma_minus_sq)?;
    write_f64le(&dir.join(&file.tau1_sq_file), &t.tau1_sq)?;
    write_f64le(&dir.join(&file.tau2_sq_file), &t.tau2_sq)?;
    let path = dir.join("truth.json");
    write_json(&path, &file)?;
    Ok(path)
}

pub fn read_truth(path: &Path) -> Result<(Vec<usize>, SimTruth)> {
    let f: TruthFile = read_json(path)?;
    if f.dtype != F64LE || f.sign.len() != f.m {
        return Err(CliError::Data(format!("{}: malformed truth file", path.display())));
    }
    let map = |name: &str| read_f64le(&sibling(path, name), f.m);
    let truth = SimTruth {
        sign: f.sign.clone(),
        rho: map(&f.rho_file)?,
        sigma_plus_sq: map(&f.sigma_plus_sq_file)?,
        sigma_minus_sq: map(&f.sigma_minus_sq_file)?,
        tau1_sq: map(&f.tau1_sq_file)?,
        tau2_sq: map(&f.tau2_sq_file)?,
    };
    Ok((f.dims, truth))
}
