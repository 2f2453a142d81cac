//! Successive-conditional simulator test: alternating data simulation and
//! one sweep of the sampler leaves the prior invariant, so moments of the
//! chain must match independent prior draws.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use tcgp_core::{transform_data, ChainState, GridDomain, HyperParams, ImageDataset, KLBasis, Sampler, TransformedDataset};

use super::{normal, rng};

/// Draws data from the likelihood given the state.
pub fn simulate_data(st: &ChainState, basis: &KLBasis, n: usize, r: &mut impl Rng) -> TransformedDataset {
    let m = basis.m();
    let (mp, mm) = tcgp_core::model::mean_fields(st, basis);
    let mut y1 = vec![0.0; n * m];
    let mut y2 = vec![0.0; n * m];
    for i in 0..n {
        for v in 0..m {
            let k = i * m + v;
            y1[k] = mp[k] + mm[k] + st.tau1_sq[v].sqrt() * normal(r);
            y2[k] = mp[k] - mm[k] + st.tau2_sq[v].sqrt() * normal(r);
        }
    }
    transform_data(&ImageDataset::new(n, m, y1, y2).unwrap()).unwrap()
}

pub fn prior_draw(basis: &KLBasis, hp: &HyperParams, n: usize, r: &mut impl Rng) -> ChainState {
    let mut st = ChainState::zeros(n, basis);
    let lam = basis.lambda();
    let l = lam.len();
    for k in 0..l {
        st.c[k] = lam[k].sqrt() * normal(r);
    }
    for i in 0..n {
        for k in 0..l {
            st.e_plus[i * l + k] = lam[k].sqrt() * normal(r);
            st.e_minus[i * l + k] = lam[k].sqrt() * normal(r);
        }
    }
    let g = Gamma::new(hp.a_tau, 1.0).unwrap();
    for v in 0..basis.m() {
        st.tau1_sq[v] = n as f64 * hp.b_tau / g.sample(r);
        st.tau2_sq[v] = n as f64 * hp.b_tau / g.sample(r);
    }
    let (a, b) = hp.omega_range.unwrap();
    st.omega = r.random_range(a..b);
    st.refresh_xi(basis);
    st
}

/// Test functions of the parameters compared by the joint-distribution test.
pub fn features(st: &ChainState) -> Vec<f64> {
    let mut f = Vec::new();
    for &c in &st.c {
        f.push(c);
        f.push(c * c);
    }
    f.push(st.omega);
    f.push(st.omega * st.omega);
    for v in [0, 3, 5] {
        f.push(st.tau1_sq[v].ln());
        f.push(st.tau2_sq[v].ln());
        f.push(if st.xi[v].abs() > st.omega { 1.0 } else { 0.0 });
    }
    f.push(st.e_plus[0]);
    f.push(st.e_minus[st.e_minus.len() - 1] * st.e_minus[st.e_minus.len() - 1]);
    f
}

/// z-scores of prior moments against the successive-conditional chain.
pub fn successive_conditional_z() -> Vec<f64> {
    let grid = GridDomain::full(&[2, 3]).unwrap();
    let n = 4;
    let hp = HyperParams {
        gamma2: 0.5,
        a_tau: 4.0,
        b_tau: 0.5,
        kl_variance_target: 0.9,
        omega_range: Some((0.0, 1.5)),
        seed: 44,
        ..Default::default()
    };
    let basis = KLBasis::build(&grid, &hp).unwrap();
    let basis = if basis.len() == 3 {
        basis
    } else {
        // keep exactly three functions
        KLBasis::from_parts(6, basis.lambda()[..3].to_vec(), basis.psi()[..18].to_vec(), 1.0).unwrap()
    };
    assert_eq!(basis.len(), 3);
    let mut r = rng(45);

    let forward = 200_000;
    let mut fwd: Vec<Vec<f64>> = Vec::with_capacity(forward);
    for _ in 0..forward {
        fwd.push(features(&prior_draw(&basis, &hp, n, &mut r)));
    }

    let start = prior_draw(&basis, &hp, n, &mut r);
    let data = simulate_data(&start, &basis, n, &mut r);
    let mut s = Sampler::new(data, &basis, &hp, false).unwrap();
    s.set_state(start).unwrap();
    let steps = 400_000;
    let mut succ: Vec<Vec<f64>> = Vec::with_capacity(steps);
    for it in 1..=steps as u64 {
        s.step(it).unwrap();
        let d = simulate_data(s.state(), &basis, n, &mut r);
        s.set_data(d).unwrap();
        succ.push(features(s.state()));
    }

    let k = fwd[0].len();
    let batches = 100;
    let mut zs = Vec::with_capacity(k);
    for j in 0..k {
        let (m1, v1) = mean_var(fwd.iter().map(|f| f[j]));
        let series: Vec<f64> = succ.iter().map(|f| f[j]).collect();
        let (m2, _) = mean_var(series.iter().copied());
        // batch means absorb the autocorrelation of the chain
        let size = series.len() / batches;
        let (_, vb) = mean_var(series.chunks(size).map(|c| c.iter().sum::<f64>() / c.len() as f64));
        let se = (v1 / forward as f64 + vb / batches as f64).sqrt();
        zs.push((m1 - m2) / se);
    }
    zs
}

pub fn mean_var(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
