//! Matérn correlation kernel and its Gram matrix on a grid.

use faer::Mat;

use crate::error::{Error, Result};
use crate::grid::GridDomain;
use crate::params::HyperParams;
use crate::special::{bessel_k_ln, ln_gamma};

/// Matérn correlation at distance `dist` with smoothness `gamma1` and length
/// scale `gamma2`:
/// 2^{1−ν}/Γ(ν) · z^ν · K_ν(z), z = √(2ν)·dist/γ2, ν = γ1.
pub fn matern(dist: f64, gamma1: f64, gamma2: f64) -> f64 {
    if dist <= 0.0 {
        return 1.0;
    }
    let z = libm::sqrt(2.0 * gamma1) * dist / gamma2;
    if gamma1 == 0.5 {
        return libm::exp(-z);
    }
    if gamma1 == 1.5 {
        return (1.0 + z) * libm::exp(-z);
    }
    if gamma1 == 2.5 {
        return (1.0 + z + z * z / 3.0) * libm::exp(-z);
    }
    matern_bessel(z, gamma1)
}

/// The Bessel-function form, used for every smoothness without a closed form.
pub fn matern_bessel(z: f64, nu: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    let ln = (1.0 - nu) * core::f64::consts::LN_2 - ln_gamma(nu) + nu * libm::log(z)
        + bessel_k_ln(nu, z);
    libm::exp(ln).min(1.0)
}

/// A dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricMatrix(pub(crate) Mat<f64>);

impl SymmetricMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut a = Mat::<f64>::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let v = f(i, j);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        Self(a)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

/// Kernel Gram matrix over all masked voxels.
pub fn gram_matrix(grid: &GridDomain, hp: &HyperParams) -> Result<SymmetricMatrix> {
    let m = grid.m();
    if m > hp.dense_limit {
        return Err(Error::DenseLimit {
            m,
            limit: hp.dense_limit,
        });
    }
    Ok(gram_of_points(grid, &(0..m).collect::<alloc::vec::Vec<_>>(), hp))
}

pub(crate) fn gram_of_points(grid: &GridDomain, pts: &[usize], hp: &HyperParams) -> SymmetricMatrix {
    SymmetricMatrix::from_fn(pts.len(), |i, j| {
        if i == j {
            1.0
        } else {
            matern(grid.distance(pts[i], pts[j]), hp.gamma1, hp.gamma2)
        }
    })
}
