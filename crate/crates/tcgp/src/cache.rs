//! Content-addressed KL basis cache. The key hashes the grid and every
//! hyperparameter the basis depends on, so a stale entry is never reused.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tcgp_core::{GridDomain, HyperParams, KLBasis};

use crate::error::{CliError, Result};
use crate::io::{create_dir, mask_bytes, read_f64le, read_json, write_f64le, write_json, F64LE};

#[derive(Serialize)]
struct Key<'a> {
    dims: &'a [usize],
    mask: Vec<u8>,
    gamma1: f64,
    gamma2: f64,
    kl_variance_target: f64,
    kl_probe_length: usize,
    dense_limit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    key: String,
    dtype: String,
    m: usize,
    l: usize,
    variance_fraction: f64,
    lambda_file: String,
    psi_file: String,
}

/// Hex SHA-256 of the grid and the basis hyperparameters.
pub fn basis_key(grid: &GridDomain, hp: &HyperParams) -> String {
    let key = Key {
        dims: grid.dims(),
        mask: mask_bytes(grid.mask()),
        gamma1: hp.gamma1,
        gamma2: hp.gamma2,
        kl_variance_target: hp.kl_variance_target,
        kl_probe_length: hp.kl_probe_length,
        dense_limit: hp.dense_limit,
    };
    let bytes = serde_json::to_vec(&key).expect("key serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn entry_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("basis-{key}.json"))
}

/// Loads the cached basis for (grid, hp) if present.
pub fn load(dir: &Path, grid: &GridDomain, hp: &HyperParams) -> Result<Option<KLBasis>> {
    let key = basis_key(grid, hp);
    let path = entry_path(dir, &key);
    if !path.exists() {
        return Ok(None);
    }
    let e: Entry = read_json(&path)?;
    if e.key != key || e.m != grid.m() || e.dtype != F64LE {
        return Err(CliError::Data(format!("{}: cache entry does not match its key", path.display())));
    }
    let lambda = read_f64le(&dir.join(&e.lambda_file), e.l)?;
    let psi = read_f64le(&dir.join(&e.psi_file), e.l * e.m)?;
    Ok(Some(KLBasis::from_parts(e.m, lambda, psi, e.variance_fraction)?))
}

pub fn store(dir: &Path, grid: &GridDomain, hp: &HyperParams, basis: &KLBasis) -> Result<()> {
    create_dir(dir)?;
    let key = basis_key(grid, hp);
    let e = Entry {
        lambda_file: format!("basis-{key}.lambda.f64"),
        psi_file: format!("basis-{key}.psi.f64"),
        key: key.clone(),
        dtype: F64LE.into(),
        m: basis.m(),
        l: basis.len(),
        variance_fraction: basis.variance_fraction(),
    };
    write_f64le(&dir.join(&e.lambda_file), basis.lambda())?;
    write_f64le(&dir.join(&e.psi_file), basis.psi())?;
    // the entry goes last so a half-written cache is never picked up
    write_json(&entry_path(dir, &key), &e)
}

/// Cached basis, building and storing it on a miss. The flag says whether it
/// came from the cache.
pub fn load_or_build(dir: Option<&Path>, grid: &GridDomain, hp: &HyperParams) -> Result<(KLBasis, bool)> {
    if let Some(dir) = dir {
        if let Some(b) = load(dir, grid, hp)? {
            return Ok((b, true));
        }
    }
    let basis = KLBasis::build(grid, hp)?;
    if let Some(dir) = dir {
        store(dir, grid, hp, &basis)?;
    }
    Ok((basis, false))
}
