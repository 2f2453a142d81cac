//! Thresholding, the correlation formula and its inverse.

use alloc::vec::Vec;

use crate::kl::KLBasis;
use crate::state::ChainState;

/// G_ω(x) = x·I(x > ω).
#[inline]
pub fn threshold_g(x: f64, omega: f64) -> f64 {
    if x > omega {
        x
    } else {
        0.0
    }
}

/// Correlation between the two modalities at a voxel with latent value `xi`.
pub fn rho_from_xi(xi: f64, omega: f64, tau1_sq: f64, tau2_sq: f64) -> f64 {
    let gp = threshold_g(xi, omega);
    let gm = threshold_g(-xi, omega);
    let gp2 = gp * gp;
    let gm2 = gm * gm;
    let s = gp2 + gm2;
    (gp2 - gm2) / libm::sqrt((s + tau1_sq) * (s + tau2_sq))
}

/// s(x; t1, t2): the signal scale σ giving correlation x at noise variances
/// t1, t2. Zero for x ≤ 0, +∞ at x = 1.
pub fn s_transform(x: f64, t1: f64, t2: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    if x >= 1.0 {
        return f64::INFINITY;
    }
    // 2t1t2/(√A − B) rewritten as x²(√A + B)/(2(1 − x²)) to avoid cancellation
    let a = (t1 - t2) * (t1 - t2) + 4.0 * t1 * t2 / (x * x);
    let b = t1 + t2;
    let one_minus = (1.0 - x) * (1.0 + x);
    libm::sqrt(x * x * (libm::sqrt(a) + b) / (2.0 * one_minus))
}

/// Signal means μ±_i(v) = G_ω(±ξ(v))·Σ_l e_{i,l,±}ψ_l(v), subject-major n × m.
pub fn mean_fields(state: &ChainState, basis: &KLBasis) -> (Vec<f64>, Vec<f64>) {
    let n = state.n();
    let m = basis.m();
    let l_len = basis.len();
    let mut mu_plus = alloc::vec![0.0; n * m];
    let mut mu_minus = alloc::vec![0.0; n * m];
    for i in 0..n {
        let ep = &state.e_plus[i * l_len..(i + 1) * l_len];
        let em = &state.e_minus[i * l_len..(i + 1) * l_len];
        let rp = &mut mu_plus[i * m..(i + 1) * m];
        let rm = &mut mu_minus[i * m..(i + 1) * m];
        for l in 0..l_len {
            let psi = basis.psi_col(l);
            for v in 0..m {
                rp[v] += ep[l] * psi[v];
                rm[v] += em[l] * psi[v];
            }
        }
        for v in 0..m {
            rp[v] *= threshold_g(state.xi[v], state.omega);
            rm[v] *= threshold_g(-state.xi[v], state.omega);
        }
    }
    (mu_plus, mu_minus)
}

/// A correlation map with its sign pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationField {
    pub rho: Vec<f64>,
    pub sign: Vec<i8>,
}

impl CorrelationField {
    pub fn from_state(state: &ChainState) -> Self {
        let rho: Vec<f64> = (0..state.xi.len())
            .map(|v| rho_from_xi(state.xi[v], state.omega, state.tau1_sq[v], state.tau2_sq[v]))
            .collect();
        let sign = rho.iter().map(|&r| sign_of(r)).collect();
        Self { rho, sign }
    }
}

pub(crate) fn sign_of(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}
