use alloc::string::String;

/// Errors raised by the engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("voxel {voxel} has zero variance in modality {modality}")]
    ZeroVariance { voxel: usize, modality: u8 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("{m} voxels exceed the dense kernel limit of {limit}")]
    DenseLimit { m: usize, limit: usize },
    #[error("eigendecomposition did not converge")]
    Decomposition,
    #[error("density not integrable on interval {index} [{lo}, {hi})")]
    NonIntegrable { index: usize, lo: f64, hi: f64 },
    #[error("density has empty support")]
    EmptySupport,
    #[error("positive and negative regions overlap at lattice point {0}")]
    RegionOverlap(usize),
}

pub type Result<T> = core::result::Result<T, Error>;
