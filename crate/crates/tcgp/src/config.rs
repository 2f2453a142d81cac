//! Run configuration: one JSON document with a `version` field and a
//! section per command. Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tcgp_core::simgen::{Region, SimSpec2D};
use tcgp_core::{GibbsConfig, HybridConfig, HyperParams};

use crate::error::{CliError, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub evaluate: EvaluateConfig,
    #[serde(default)]
    pub report: ReportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            simulate: SimulateConfig::default(),
            fit: FitConfig::default(),
            evaluate: EvaluateConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
pub enum Design {
    #[default]
    #[serde(rename = "2d")]
    #[value(name = "2d")]
    TwoD,
    #[serde(rename = "3d")]
    #[value(name = "3d")]
    ThreeD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    #[default]
    Strong,
    Weak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub design: Design,
    pub signal: Signal,
    /// Overrides the (ζ₊, ζ₋) pair implied by `signal`.
    pub zetas: Option<(f64, f64)>,
    pub n: usize,
    /// Side of the square 2D grid.
    pub side: usize,
    /// Lattice of the 3D design.
    pub dims: Option<Vec<usize>>,
    /// Required for 3D; replaces the five built-in regions in 2D.
    pub regions: Option<Vec<Region>>,
    /// Base name of the dataset files.
    pub name: String,
    pub seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let d = SimSpec2D::default();
        Self {
            design: Design::TwoD,
            signal: Signal::Strong,
            zetas: None,
            n: d.n,
            side: d.side,
            dims: None,
            regions: None,
            name: "data".into(),
            seed: 0,
        }
    }
}

impl SimulateConfig {
    pub fn zetas(&self) -> (f64, f64) {
        self.zetas.unwrap_or(match self.signal {
            Signal::Strong => SimSpec2D::STRONG,
            Signal::Weak => SimSpec2D::WEAK,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(CliError::Config(format!("bad dataset name {:?}", self.name)));
        }
        if self.design == Design::ThreeD {
            match &self.dims {
                Some(d) if d.len() == 3 => {}
                _ => return Err(CliError::Config("the 3d design needs `dims` with three entries".into())),
            }
            if self.regions.as_ref().is_none_or(|r| r.is_empty()) {
                return Err(CliError::Config("the 3d design needs at least one region in `regions`".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    #[default]
    Gibbs,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Dataset header; defaults to `{out}/data.json`.
    pub dataset: Option<PathBuf>,
    pub sampler: SamplerKind,
    pub hyper: HyperParams,
    pub gibbs: GibbsConfig,
    pub hybrid: HybridConfig,
    /// Basis cache directory; defaults to `{out}/cache`.
    pub cache_dir: Option<PathBuf>,
    /// Skip the basis cache entirely.
    pub no_cache: bool,
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        match self.sampler {
            SamplerKind::Gibbs => self.gibbs.validate()?,
            // the batch size is checked once m is known
            SamplerKind::Hybrid => self.hybrid.validate(usize::MAX)?,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Defaults to `{out}/summary.json`.
    pub summary: Option<PathBuf>,
    /// Defaults to `{out}/truth.json`.
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Defaults to `{out}/summary.json`.
    pub summary: Option<PathBuf>,
    /// Smallest cluster reported, in voxels.
    pub min_size: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            summary: None,
            min_size: 101,
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    if cfg.version != CONFIG_VERSION {
        return Err(CliError::Config(format!(
            "unsupported config version {} (expected {CONFIG_VERSION})",
            cfg.version
        )));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
