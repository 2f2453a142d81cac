use crate::data::TransformedDataset;
use crate::kl::KLBasis;
use crate::model::mean_fields;
use crate::params::HyperParams;
use crate::special::{ln_gamma, LN_SQRT_2PI};
use crate::state::ChainState;

/// ln of the InverseGamma(shape, scale) density at x.
pub fn inverse_gamma_ln_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    shape * libm::log(scale) - ln_gamma(shape) - (shape + 1.0) * libm::log(x) - scale / x
}

fn normal_ln_pdf(x: f64, var: f64) -> f64 {
    -LN_SQRT_2PI - 0.5 * libm::log(var) - 0.5 * x * x / var
}

/// Joint log-density of data and parameters, up to the Jacobian of the
/// (Y1, Y2) → (Y₊, Y₋) change of variables.
///
/// Evaluated in the original modality space, where the two noises are
/// independent with variances τ1², τ2²; the τ² prior is
/// InverseGamma(a_τ, n·b_τ), the ω prior uniform on `omega_range`.
pub fn joint_log_posterior(
    state: &ChainState,
    data: &TransformedDataset,
    basis: &KLBasis,
    hp: &HyperParams,
    omega_range: (f64, f64),
) -> f64 {
    let n = data.n();
    let m = data.m();
    let (mu_plus, mu_minus) = mean_fields(state, basis);
    let (y1, y2) = data.reconstruct();
    let mut lp = 0.0;
    for i in 0..n {
        for v in 0..m {
            let k = i * m + v;
            let mu1 = mu_plus[k] + mu_minus[k];
            let mu2 = mu_plus[k] - mu_minus[k];
            lp += normal_ln_pdf(y1[k] - mu1, state.tau1_sq[v]);
            lp += normal_ln_pdf(y2[k] - mu2, state.tau2_sq[v]);
        }
    }
    let lambda = basis.lambda();
    let l_len = lambda.len();
    for l in 0..l_len {
        lp += normal_ln_pdf(state.c[l], lambda[l]);
        for i in 0..n {
            lp += normal_ln_pdf(state.e_plus[i * l_len + l], lambda[l]);
            lp += normal_ln_pdf(state.e_minus[i * l_len + l], lambda[l]);
        }
    }
    let scale = n as f64 * hp.b_tau;
    for v in 0..m {
        lp += inverse_gamma_ln_pdf(state.tau1_sq[v], hp.a_tau, scale);
        lp += inverse_gamma_ln_pdf(state.tau2_sq[v], hp.a_tau, scale);
    }
    let (a, b) = omega_range;
    if state.omega >= a && state.omega <= b && a < b {
        lp -= libm::log(b - a);
    } else {
        return f64::NEG_INFINITY;
    }
    lp
}
