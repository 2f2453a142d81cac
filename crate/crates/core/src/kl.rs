//! Truncated Karhunen-Loève bases of the Matérn kernel.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use faer::Mat;

use crate::error::{Error, Result};
use crate::grid::GridDomain;
use crate::kernel::{gram_matrix, gram_of_points, matern, SymmetricMatrix};
use crate::linalg::sym_eigen_desc;
use crate::params::HyperParams;

/// Eigenvalues below this fraction of the largest are treated as noise.
pub const CLIP_RATIO: f64 = 1e-10;

/// Leading eigenpairs scaled so that (1/m)·ΨᵀΨ = I and Ψ·diag(λ)·Ψᵀ ≈ K.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpairs {
    pub m: usize,
    /// Descending, strictly positive.
    pub lambda: Vec<f64>,
    /// Column-major, one column of length m per eigenvalue.
    pub psi: Vec<f64>,
}

/// Top min(`l_probe`, m) eigenpairs of a Gram matrix, with tiny or negative
/// eigenvalues dropped.
pub fn eigendecompose(gram: &SymmetricMatrix, l_probe: usize) -> Result<Eigenpairs> {
    let m = gram.dim();
    let (values, vectors) = sym_eigen_desc(&gram.0, l_probe.min(m))?;
    let lmax = values.first().copied().unwrap_or(0.0);
    if !(lmax > 0.0) {
        return Err(Error::InvalidParam("Gram matrix has no positive eigenvalue".into()));
    }
    let keep = values.iter().take_while(|&&v| v >= CLIP_RATIO * lmax).count();
    let scale = libm::sqrt(m as f64);
    Ok(Eigenpairs {
        m,
        lambda: values[..keep].iter().map(|v| v / m as f64).collect(),
        psi: vectors[..keep * m].iter().map(|u| u * scale).collect(),
    })
}

/// Smallest L whose leading eigenvalues carry at least fraction `r` of the
/// total.
pub fn select_truncation(lambda: &[f64], r: f64) -> usize {
    let total: f64 = lambda.iter().sum();
    let mut cum = 0.0;
    for (l, &v) in lambda.iter().enumerate() {
        cum += v;
        if cum / total >= r {
            return l + 1;
        }
    }
    lambda.len()
}

/// A truncated KL basis on the masked voxels of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KLBasis {
    m: usize,
    lambda: Vec<f64>,
    psi: Vec<f64>,
    variance_fraction: f64,
}

impl KLBasis {
    /// Builds the basis for `grid`: dense eigendecomposition when the grid
    /// fits under `hp.dense_limit`, Nyström extension from a strided
    /// sub-lattice otherwise.
    pub fn build(grid: &GridDomain, hp: &HyperParams) -> Result<Self> {
        hp.validate()?;
        if grid.m() <= hp.dense_limit {
            let gram = gram_matrix(grid, hp)?;
            let eig = eigendecompose(&gram, hp.kl_probe_length)?;
            drop(gram);
            Ok(Self::truncate(eig, hp.kl_variance_target))
        } else {
            nystrom(grid, hp)
        }
    }

    fn truncate(eig: Eigenpairs, r: f64) -> Self {
        let l = select_truncation(&eig.lambda, r);
        let total: f64 = eig.lambda.iter().sum();
        let kept: f64 = eig.lambda[..l].iter().sum();
        let mut lambda = eig.lambda;
        lambda.truncate(l);
        let mut psi = eig.psi;
        psi.truncate(l * eig.m);
        Self {
            m: eig.m,
            lambda,
            psi,
            variance_fraction: kept / total,
        }
    }

    /// Reassembles a basis, e.g. from a cache file.
    pub fn from_parts(m: usize, lambda: Vec<f64>, psi: Vec<f64>, variance_fraction: f64) -> Result<Self> {
        if lambda.is_empty() || psi.len() != lambda.len() * m {
            return Err(Error::Shape(format!(
                "basis with {} eigenvalues needs {} psi values, got {}",
                lambda.len(),
                lambda.len() * m,
                psi.len()
            )));
        }
        if lambda.iter().any(|&v| !(v > 0.0 && v.is_finite())) || lambda.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParam("eigenvalues must be positive and descending".into()));
        }
        if psi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("basis functions".into()));
        }
        Ok(Self {
            m,
            lambda,
            psi,
            variance_fraction,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Truncation level L.
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// All basis values, column-major by eigenindex.
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// ψ_l evaluated at every voxel.
    pub fn psi_col(&self, l: usize) -> &[f64] {
        &self.psi[l * self.m..(l + 1) * self.m]
    }

    pub fn variance_fraction(&self) -> f64 {
        self.variance_fraction
    }
}

/// field(v) = Σ_l coeffs_l ψ_l(v).
pub fn evaluate_basis(basis: &KLBasis, coeffs: &[f64]) -> Result<Vec<f64>> {
    if coeffs.len() != basis.len() {
        return Err(Error::Shape(format!(
            "{} coefficients for a basis of length {}",
            coeffs.len(),
            basis.len()
        )));
    }
    let mut field = vec![0.0; basis.m];
    for (l, &c) in coeffs.iter().enumerate() {
        for (f, &p) in field.iter_mut().zip(basis.psi_col(l)) {
            *f += c * p;
        }
    }
    Ok(field)
}

/// Masked voxels on the coarsest-needed strided sub-lattice.
fn sub_lattice(grid: &GridDomain, limit: usize) -> Vec<usize> {
    let mut stride = 2;
    loop {
        let pts: Vec<usize> = (0..grid.m())
            .filter(|&j| grid.position(j).iter().all(|p| p % stride == 0))
            .collect();
        if pts.len() <= limit {
            return pts;
        }
        stride += 1;
    }
}

fn nystrom(grid: &GridDomain, hp: &HyperParams) -> Result<KLBasis> {
    let sub = sub_lattice(grid, hp.dense_limit);
    if sub.is_empty() {
        return Err(Error::InvalidParam("sub-lattice for the Nyström basis is empty".into()));
    }
    let ms = sub.len();
    let gram = gram_of_points(grid, &sub, hp);
    let eig = eigendecompose(&gram, hp.kl_probe_length)?;
    drop(gram);
    let l = select_truncation(&eig.lambda, hp.kl_variance_target);
    let total: f64 = eig.lambda.iter().sum();
    let lambda: Vec<f64> = eig.lambda[..l].to_vec();
    let variance_fraction = lambda.iter().sum::<f64>() / total;

    // weights W[j, l] = ψ_l(v_j)/(λ_l m_s), so Ψ(v) = Σ_j κ(v, v_j) W[j, l]
    let w = Mat::<f64>::from_fn(ms, l, |j, k| eig.psi[k * ms + j] / (lambda[k] * ms as f64));
    let m = grid.m();
    let mut full = Mat::<f64>::zeros(m, l);
    let block = 256;
    let mut start = 0;
    while start < m {
        let rows = block.min(m - start);
        let kb = Mat::<f64>::from_fn(rows, ms, |r, j| {
            matern(grid.distance(start + r, sub[j]), hp.gamma1, hp.gamma2)
        });
        let prod = &kb * &w;
        for k in 0..l {
            for r in 0..rows {
                full[(start + r, k)] = prod[(r, k)];
            }
        }
        start += rows;
    }

    // re-orthonormalize under the 1/m inner product: Ψ ← Ψ·G^{-1/2}
    let g = Mat::<f64>::from_fn(l, l, |a, b| {
        (0..m).map(|v| full[(v, a)] * full[(v, b)]).sum::<f64>() / m as f64
    });
    let (gv, gu) = sym_eigen_desc(&g, l)?;
    if gv.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Decomposition);
    }
    let inv_sqrt = Mat::<f64>::from_fn(l, l, |a, b| {
        (0..l).map(|k| gu[k * l + a] * gu[k * l + b] / libm::sqrt(gv[k])).sum::<f64>()
    });
    let ortho = &full * &inv_sqrt;
    let mut psi = Vec::with_capacity(m * l);
    for k in 0..l {
        psi.extend((0..m).map(|v| ortho[(v, k)]));
    }
    KLBasis::from_parts(m, lambda, psi, variance_fraction)
}
