//! Posterior draws: `manifest.json` plus one f64 block per quantity, kept
//! draws as the slow axis. PIP counts are stored as f64 like everything else.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tcgp_core::PosteriorSamples;

use super::{create_dir, read_f64le, read_json, write_f64le, write_json, F64LE};
use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";
pub const POSTERIOR_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blocks {
    /// kept × L
    pub c: String,
    pub omega: String,
    /// kept × m
    pub rho: String,
    pub pip_plus_count: String,
    pub pip_minus_count: String,
    pub log_posterior: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosteriorManifest {
    pub version: u32,
    pub dtype: String,
    pub m: usize,
    pub l: usize,
    pub kept: usize,
    pub blocks: Blocks,
}

pub fn write_posterior(dir: &Path, s: &PosteriorSamples) -> Result<()> {
    create_dir(dir)?;
    let blocks = Blocks {
        c: "c.f64".into(),
        omega: "omega.f64".into(),
        rho: "rho.f64".into(),
        pip_plus_count: "pip_plus_count.f64".into(),
        pip_minus_count: "pip_minus_count.f64".into(),
        log_posterior: "log_posterior.f64".into(),
    };
    let counts = |c: &[u32]| c.iter().map(|&x| x as f64).collect::<Vec<_>>();
    write_f64le(&dir.join(&blocks.c), &s.c)?;
    write_f64le(&dir.join(&blocks.omega), &s.omega)?;
    write_f64le(&dir.join(&blocks.rho), &s.rho)?;
    write_f64le(&dir.join(&blocks.pip_plus_count), &counts(&s.pip_plus_count))?;
    write_f64le(&dir.join(&blocks.pip_minus_count), &counts(&s.pip_minus_count))?;
    write_f64le(&dir.join(&blocks.log_posterior), &s.log_posterior)?;
    write_json(
        &dir.join(MANIFEST),
        &PosteriorManifest {
            version: POSTERIOR_VERSION,
            dtype: F64LE.into(),
            m: s.m,
            l: s.l,
            kept: s.kept,
            blocks,
        },
    )
}

/// Loads draws written by [`write_posterior`]. Traces are not part of the
/// posterior files and come back empty.
pub fn read_posterior(dir: &Path) -> Result<PosteriorSamples> {
    let man: PosteriorManifest = read_json(&dir.join(MANIFEST))?;
    if man.version != POSTERIOR_VERSION || man.dtype != F64LE {
        return Err(CliError::Data(format!(
            "unsupported posterior version {} / dtype {:?}",
            man.version, man.dtype
        )));
    }
    let b = &man.blocks;
    let counts = |name: &str| -> Result<Vec<u32>> {
        read_f64le(&dir.join(name), man.m)?
            .into_iter()
            .map(|x| {
                if x >= 0.0 && x.fract() == 0.0 && x <= man.kept as f64 {
                    Ok(x as u32)
                } else {
                    Err(CliError::Data(format!("{name}: bad count {x}")))
                }
            })
            .collect()
    };
    Ok(PosteriorSamples {
        m: man.m,
        l: man.l,
        kept: man.kept,
        c: read_f64le(&dir.join(&b.c), man.kept * man.l)?,
        omega: read_f64le(&dir.join(&b.omega), man.kept)?,
        rho: read_f64le(&dir.join(&b.rho), man.kept * man.m)?,
        pip_plus_count: counts(&b.pip_plus_count)?,
        pip_minus_count: counts(&b.pip_minus_count)?,
        log_posterior: read_f64le(&dir.join(&b.log_posterior), man.kept)?,
        tau_trace: Vec::new(),
        e_trace: Vec::new(),
    })
}
