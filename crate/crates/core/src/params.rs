use alloc::format;

use crate::error::{Error, Result};

/// Model hyperparameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct HyperParams {
    /// Matérn smoothness.
    pub gamma1: f64,
    /// Matérn length scale in unit grid coordinates.
    pub gamma2: f64,
    /// Inverse-gamma shape for the noise variances.
    pub a_tau: f64,
    /// Inverse-gamma scale for the noise variances.
    pub b_tau: f64,
    /// Quantiles of |ξ| bounding the uniform prior on ω.
    pub omega_quantiles: (f64, f64),
    /// Fixed ω prior range used when ω is not adaptive. `None` derives it
    /// once from the quantiles of the initial ξ.
    pub omega_range: Option<(f64, f64)>,
    /// Target fraction of kernel variance retained by the KL truncation.
    pub kl_variance_target: f64,
    /// Number of leading eigenpairs computed before truncating.
    pub kl_probe_length: usize,
    pub pip_threshold: f64,
    /// Largest voxel count for which the Gram matrix is built densely.
    pub dense_limit: usize,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            gamma1: 1.5,
            gamma2: 0.1,
            a_tau: 0.001,
            b_tau: 0.001,
            omega_quantiles: (0.0, 1.0),
            omega_range: None,
            kl_variance_target: 0.6,
            kl_probe_length: 900,
            pip_threshold: 0.5,
            dense_limit: 20_000,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("a_tau", self.a_tau),
            ("b_tau", self.b_tau),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam(format!("{name} must be positive, got {v}")));
            }
        }
        let (lo, hi) = self.omega_quantiles;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "omega quantiles must satisfy 0 <= lo < hi <= 1, got ({lo}, {hi})"
            )));
        }
        if let Some((a, b)) = self.omega_range {
            if !(0.0 <= a && a < b && b.is_finite()) {
                return Err(Error::InvalidParam(format!("bad omega range ({a}, {b})")));
            }
        }
        if !(self.kl_variance_target > 0.0 && self.kl_variance_target <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "KL variance target must lie in (0, 1], got {}",
                self.kl_variance_target
            )));
        }
        if self.kl_probe_length == 0 {
            return Err(Error::InvalidParam("KL probe length must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.pip_threshold) {
            return Err(Error::InvalidParam(format!(
                "PIP threshold must lie in [0, 1), got {}",
                self.pip_threshold
            )));
        }
        if self.dense_limit == 0 {
            return Err(Error::InvalidParam("dense limit must be positive".into()));
        }
        Ok(())
    }
}

/// Where a chain starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum InitStrategy {
    /// Every parameter drawn from its prior.
    #[default]
    Prior,
    /// ξ from the basis projection of the voxel-wise sample correlations
    /// mapped through s(·; 1, 1), ω at the 80% quantile of |ξ|, then a few
    /// τ² and e sweeps given that ξ. Prior starts tend to lock onto a single
    /// region when several are present.
    Correlation,
}

/// Settings for the full-conditional Gibbs sampler.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct GibbsConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub adaptive_omega: bool,
    /// Store e and τ² traces every this many kept draws (0 disables).
    pub trace_every: usize,
    pub init: InitStrategy,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            n_iter: 1000,
            burn_in: 200,
            thin: 1,
            adaptive_omega: true,
            trace_every: 0,
            init: InitStrategy::Prior,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        validate_schedule(self.n_iter, self.burn_in, self.thin)
    }
}

/// Settings for the hybrid mini-batch sampler.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct HybridConfig {
    /// Batch size; `None` means m/16 (at least 1).
    pub batch_size: Option<usize>,
    /// Every `full_period`-th iteration updates c and ω with all voxels.
    pub full_period: usize,
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub adaptive_omega: bool,
    pub trace_every: usize,
    pub init: InitStrategy,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            batch_size: None,
            full_period: 20,
            n_iter: 1200,
            burn_in: 400,
            thin: 1,
            adaptive_omega: true,
            trace_every: 0,
            init: InitStrategy::Prior,
        }
    }
}

impl HybridConfig {
    pub fn batch_size_for(&self, m: usize) -> usize {
        self.batch_size.unwrap_or((m / 16).max(1))
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        let ms = self.batch_size_for(m);
        if ms == 0 || ms > m {
            return Err(Error::InvalidParam(format!(
                "batch size must lie in [1, {m}], got {ms}"
            )));
        }
        if self.full_period == 0 {
            return Err(Error::InvalidParam("full-sweep period must be at least 1".into()));
        }
        validate_schedule(self.n_iter, self.burn_in, self.thin)
    }
}

fn validate_schedule(n_iter: usize, burn_in: usize, thin: usize) -> Result<()> {
    if burn_in >= n_iter {
        return Err(Error::InvalidParam(format!(
            "burn-in ({burn_in}) must be smaller than the iteration count ({n_iter})"
        )));
    }
    if thin == 0 {
        return Err(Error::InvalidParam("thin must be at least 1".into()));
    }
    Ok(())
}
