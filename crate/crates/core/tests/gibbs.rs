use tcgp_core::gibbs::abs_quantiles;
use tcgp_core::special::norm_cdf;
use tcgp_core::state::Channel;
use tcgp_core::{run_gibbs, ChainState, GibbsConfig, HyperParams, InitStrategy, KLBasis, Sampler, TransformedDataset};

mod common;
use common::{rng, Toy};

fn ks_uniform(mut draws: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// One voxel, ψ ≡ 1, so ξ = c.
fn one_voxel(lambda: f64) -> KLBasis {
    KLBasis::from_parts(1, vec![lambda], vec![1.0], 1.0).unwrap()
}

fn fixed_hp(range: (f64, f64)) -> HyperParams {
    HyperParams {
        omega_range: Some(range),
        ..Default::default()
    }
}

#[test]
fn tau_conditional_without_residuals_is_the_prior_update() {
    let basis = one_voxel(1.0);
    let n = 6;
    let data = TransformedDataset::new(n, 1, vec![0.0; n], vec![0.0; n]).unwrap();
    let hp = HyperParams {
        a_tau: 0.7,
        b_tau: 0.2,
        ..fixed_hp((0.0, 1.0))
    };
    let mut s = Sampler::new(data, &basis, &hp, false).unwrap();
    let mut st = ChainState::zeros(n, &basis);
    st.c[0] = 5.0;
    st.omega = 0.5;
    st.e_plus.iter_mut().for_each(|x| *x = 0.3);
    s.set_state(st).unwrap();
    let t = s.tau_conditional(0);
    // Y = 0 and E = 0 leave no residual
    let mut st = s.state().clone();
    st.e_plus.iter_mut().for_each(|x| *x = 0.0);
    s.set_state(st).unwrap();
    let t0 = s.tau_conditional(0);
    assert_eq!(t0.shape, 0.7 + 3.0);
    assert_eq!(t0.scale1, n as f64 * 0.2);
    assert_eq!(t0.scale2, n as f64 * 0.2);
    // with E = 0.3 and σ = 5 both modality residuals are −1.5 per subject
    assert!((t.scale1 - (0.5 * n as f64 * 2.25 + n as f64 * 0.2)).abs() < 1e-12);
}

#[test]
fn tau_draws_have_inverse_gamma_mean() {
    let toy = Toy::new(&[2, 2], 12, 0.3, 0.9, 31);
    let mut s = toy.sampler();
    s.set_state(toy.random_state(32)).unwrap();
    let cond = s.tau_conditional(2);
    let draws = 100_000;
    let mut sum1 = 0.0;
    let mut sum2 = 0.0;
    for it in 0..draws {
        s.update_tau(it as u64 + 1);
        sum1 += s.state().tau1_sq[2];
        sum2 += s.state().tau2_sq[2];
    }
    let a = cond.shape;
    for (sum, scale) in [(sum1, cond.scale1), (sum2, cond.scale2)] {
        let mean = scale / (a - 1.0);
        let sd = scale / ((a - 1.0) * (a - 2.0).sqrt()) / (draws as f64).sqrt();
        let got = sum / draws as f64;
        assert!((got - mean).abs() < 3.0 * sd, "mean {got} vs {mean} (sd {sd})");
    }
}

#[test]
fn e_conditional_is_the_prior_when_nothing_is_active() {
    let toy = Toy::new(&[3, 3], 4, 0.3, 0.9, 33);
    let mut s = toy.sampler();
    let mut st = toy.random_state(34);
    st.omega = st.xi.iter().fold(0.0f64, |a, x| a.max(x.abs())) + 1.0;
    s.set_omega_range((0.0, 2.0 * st.omega));
    s.set_state(st).unwrap();
    for l in 0..toy.basis.len() {
        for ch in [Channel::Plus, Channel::Minus] {
            let c = s.e_conditional(l, ch);
            assert_eq!(c.precision, 1.0 / toy.basis.lambda()[l]);
            assert!(c.means.iter().all(|&m| m == 0.0));
        }
    }
}

#[test]
fn e_conditional_matches_conjugate_algebra() {
    let lambda = 0.8;
    let basis = one_voxel(lambda);
    let (yp, ym) = ([1.3, -0.4], [0.6, 0.9]);
    let data = TransformedDataset::new(2, 1, yp.to_vec(), ym.to_vec()).unwrap();
    let mut s = Sampler::new(data, &basis, &fixed_hp((0.0, 3.0)), false).unwrap();
    let (t1, t2) = (0.7, 1.9);
    for (xi, ch) in [(1.7, Channel::Plus), (-2.2, Channel::Minus)] {
        let mut st = ChainState::zeros(2, &basis);
        st.c[0] = xi;
        st.omega = 0.5;
        st.tau1_sq[0] = t1;
        st.tau2_sq[0] = t2;
        s.set_state(st).unwrap();
        // (ε₊, ε₋) bivariate normal with variance u² and correlation r
        let u2 = (t1 + t2) / 4.0;
        let r = (t1 - t2) / (t1 + t2);
        let sigma = f64::abs(xi);
        let (own, other) = match ch {
            Channel::Plus => (yp, ym),
            Channel::Minus => (ym, yp),
        };
        let w = 1.0 / (u2 * (1.0 - r * r));
        let precision = 1.0 / lambda + sigma * sigma * w;
        let c = s.e_conditional(0, ch);
        assert!((c.precision - precision).abs() < 1e-12 * precision);
        for i in 0..2 {
            let mean = sigma * (own[i] - r * other[i]) * w / precision;
            assert!((c.means[i] - mean).abs() < 1e-12, "subject {i}: {} vs {mean}", c.means[i]);
        }
    }
}

#[test]
fn coefficient_conditional_is_the_prior_when_nothing_activates() {
    let toy = Toy::new(&[3, 3], 4, 0.3, 0.9, 35);
    let mut s = toy.sampler();
    // E ≡ 0 removes every likelihood term, whatever ω
    let mut st = toy.random_state(36);
    st.e_plus.iter_mut().for_each(|x| *x = 0.0);
    st.e_minus.iter_mut().for_each(|x| *x = 0.0);
    s.set_state(st).unwrap();
    let lam = toy.basis.lambda()[0];
    let pd = s.coef_density(0, None).unwrap();
    let mut r = rng(37);
    let draws: Vec<f64> = (0..100_000).map(|_| pd.sample(&mut r)).collect();
    let d = ks_uniform(draws, |x| norm_cdf(x / lam.sqrt()));
    assert!(d < 0.01, "KS {d}");
}

/// ∫ exp(f) on a fine grid with Simpson's rule, split at the given knots.
fn cdf_table(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, knots: &[f64], cells: usize) -> Vec<(f64, f64)> {
    let mut edges = vec![lo, hi];
    edges.extend(knots.iter().copied().filter(|k| *k > lo && *k < hi));
    edges.sort_by(f64::total_cmp);
    let peak = (0..=cells)
        .map(|k| f(lo + (hi - lo) * k as f64 / cells as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut table = vec![(lo, 0.0)];
    let mut acc = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let k = ((cells as f64) * (b - a) / (hi - lo)).ceil().max(2.0) as usize;
        let h = (b - a) / k as f64;
        let eps = h * 1e-9;
        let g = |x: f64| (f(x.clamp(a + eps, b - eps)) - peak).exp();
        for j in 0..k {
            let x0 = a + j as f64 * h;
            acc += h / 6.0 * (g(x0) + 4.0 * g(x0 + 0.5 * h) + g(x0 + h));
            table.push((x0 + h, acc));
        }
    }
    table.iter().map(|&(x, c)| (x, c / acc)).collect()
}

fn interpolate(table: &[(f64, f64)], x: f64) -> f64 {
    let k = table.partition_point(|p| p.0 <= x);
    if k == 0 {
        return 0.0;
    }
    if k == table.len() {
        return 1.0;
    }
    let (x0, c0) = table[k - 1];
    let (x1, c1) = table[k];
    c0 + (c1 - c0) * (x - x0) / (x1 - x0)
}

#[test]
fn coefficient_draws_match_joint_on_one_voxel() {
    let basis = one_voxel(1.4);
    let data = TransformedDataset::new(2, 1, vec![1.1, -2.0], vec![0.8, 1.7]).unwrap();
    let mut s = Sampler::new(data, &basis, &fixed_hp((0.0, 3.0)), false).unwrap();
    let mut st = ChainState::zeros(2, &basis);
    st.omega = 0.6;
    st.e_plus.copy_from_slice(&[0.9, -1.2]);
    st.e_minus.copy_from_slice(&[-0.5, 1.4]);
    st.tau1_sq[0] = 0.5;
    st.tau2_sq[0] = 1.3;
    s.set_state(st.clone()).unwrap();
    let pd = s.coef_density(0, None).unwrap();
    let mut r = rng(38);
    let draws: Vec<f64> = (0..100_000).map(|_| pd.sample(&mut r)).collect();

    let mut probe = s.clone();
    let joint = move |c: f64| {
        let mut x = st.clone();
        x.c[0] = c;
        probe.set_state(x).unwrap();
        probe.joint_log_posterior()
    };
    let cell = std::cell::RefCell::new(joint);
    let f = |c: f64| (cell.borrow_mut())(c);
    let table = cdf_table(&f, -12.0, 12.0, &[-0.6, 0.6], 40_000);
    let d = ks_uniform(draws, |x| interpolate(&table, x));
    assert!(d < 0.01, "KS {d}");
}

#[test]
fn omega_is_uniform_without_likelihood_terms() {
    let toy = Toy::new(&[3, 3], 4, 0.3, 0.9, 39);
    let mut s = toy.sampler();
    let mut st = toy.random_state(40);
    st.e_plus.iter_mut().for_each(|x| *x = 0.0);
    st.e_minus.iter_mut().for_each(|x| *x = 0.0);
    s.set_state(st).unwrap();
    let (a, b) = s.omega_range();
    let pd = s.omega_density(None).unwrap().unwrap();
    let mut r = rng(41);
    let draws: Vec<f64> = (0..100_000).map(|_| pd.sample(&mut r)).collect();
    let d = ks_uniform(draws, |x| (x - a) / (b - a));
    assert!(d < 0.01, "KS {d}");
}

#[test]
fn omega_weights_on_two_voxels_match_direct_integration() {
    let basis = KLBasis::from_parts(2, vec![1.0, 0.5], vec![1.0, 1.0, 1.0, -1.0], 1.0).unwrap();
    let data = TransformedDataset::new(2, 2, vec![0.4, 1.2, -0.3, 0.9], vec![0.2, -0.7, 1.1, 0.5]).unwrap();
    let range = (0.0, 3.0);
    let mut s = Sampler::new(data, &basis, &fixed_hp(range), false).unwrap();
    let mut st = ChainState::zeros(2, &basis);
    // ξ = (c0 + c1, c0 − c1) = (1.5, −0.5)
    st.c.copy_from_slice(&[0.5, 1.0]);
    st.e_plus.copy_from_slice(&[0.7, -0.2, 1.1, 0.4]);
    st.e_minus.copy_from_slice(&[-0.6, 0.3, 0.2, 0.9]);
    st.tau1_sq.copy_from_slice(&[0.8, 1.5]);
    st.tau2_sq.copy_from_slice(&[1.2, 0.6]);
    st.omega = 0.1;
    s.set_state(st.clone()).unwrap();
    let pd = s.omega_density(None).unwrap().unwrap();

    // the joint is constant on (0, 0.5), (0.5, 1.5), (1.5, 3)
    let pieces = [(0.0, 0.5), (0.5, 1.5), (1.5, 3.0)];
    let mut probe = s.clone();
    let logw: Vec<f64> = pieces
        .iter()
        .map(|&(a, b)| {
            let mut x = st.clone();
            x.omega = 0.5 * (a + b);
            probe.set_state(x).unwrap();
            probe.joint_log_posterior() + f64::ln(b - a)
        })
        .collect();
    let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logw.iter().map(|w| (w - top).exp()).sum();
    let want: Vec<f64> = logw.iter().map(|w| (w - top).exp() / total).collect();

    assert_eq!(pd.breakpoints(), vec![0.0, 0.5, 1.5, 3.0]);
    let masses: Vec<f64> = pd.segments().iter().map(|g| g.log_mass()).collect();
    let mt = masses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mtotal: f64 = masses.iter().map(|w| (w - mt).exp()).sum();
    for (k, w) in masses.iter().enumerate() {
        let got = (w - mt).exp() / mtotal;
        assert!((got - want[k]).abs() < 1e-12, "piece {k}: {got} vs {}", want[k]);
    }
}

#[test]
fn runs_are_deterministic_and_keep_invariants() {
    let toy = Toy::new(&[4, 4], 6, 0.3, 0.9, 42);
    let hp = HyperParams {
        omega_range: None,
        ..toy.hp.clone()
    };
    let cfg = GibbsConfig {
        n_iter: 60,
        burn_in: 10,
        trace_every: 5,
        ..Default::default()
    };
    let a = run_gibbs(&toy.data, &toy.basis, &hp, &cfg).unwrap();
    let b = run_gibbs(&toy.data, &toy.basis, &hp, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.kept, 50);
    assert!(a.log_posterior.iter().all(|x| x.is_finite()));
    for v in 0..a.m {
        assert!(a.pip_plus_count[v] + a.pip_minus_count[v] <= a.kept as u32);
    }
    for (_, t1, t2) in &a.tau_trace {
        assert!(t1.iter().chain(t2).all(|&t| t > 0.0));
    }
    let other = run_gibbs(&toy.data, &toy.basis, &HyperParams { seed: 99, ..hp.clone() }, &cfg).unwrap();
    assert_ne!(a.c, other.c);
}

#[test]
fn chain_invariants_hold_step_by_step() {
    let toy = Toy::new(&[4, 3], 5, 0.3, 0.9, 43);
    let hp = HyperParams {
        omega_range: None,
        ..toy.hp.clone()
    };
    let mut s = Sampler::new(toy.data.clone(), &toy.basis, &hp, true).unwrap();
    for it in 1..=100u64 {
        s.step(it).unwrap();
        let st = s.state();
        let (a, b) = s.omega_range();
        assert!(st.omega >= a && st.omega <= b);
        assert!(st.tau1_sq.iter().chain(&st.tau2_sq).all(|&t| t > 0.0));
        assert!(st.xi_error(&toy.basis) < 1e-10);
        assert!(s.joint_log_posterior().is_finite());
        // the range was taken before the final re-derivation of ξ from c
        let q = abs_quantiles(&st.xi, hp.omega_quantiles);
        assert!((q.0 - a).abs() < 1e-10 && (q.1 - b).abs() < 1e-10);
    }
}

#[test]
fn successive_conditional_simulator_matches_the_prior() {
    let zs = common::geweke::successive_conditional_z();
    for (j, z) in zs.iter().enumerate() {
        assert!(z.abs() < 4.0, "feature {j}: z = {z:.2}");
    }
    println!("largest |z| = {:.2}", zs.iter().fold(0.0f64, |a, z| a.max(z.abs())));
}

fn started(sim: &tcgp_core::simgen::Simulated, seed: u64) -> (ChainState, usize) {
    let td = tcgp_core::transform_data(&tcgp_core::normalize_dataset(&sim.data).unwrap()).unwrap();
    let hp = HyperParams { seed, ..Default::default() };
    let basis = KLBasis::build(&sim.grid, &hp).unwrap();
    let mut s = Sampler::new(td, &basis, &hp, true).unwrap();
    s.initialize(InitStrategy::Correlation);
    let st = s.state().clone();
    let active = st.xi.iter().filter(|x| x.abs() > st.omega).count();
    (st, active)
}

#[test]
fn correlation_start_ignores_null_data() {
    let total: usize = (1..=4)
        .map(|seed| started(&tcgp_core::simgen::generate(&[32, 32], 40, &[], (0.0, 0.0), seed).unwrap(), seed).1)
        .sum();
    assert!(total * 20 < 4 * 1024, "{total} of 4096 voxels start active");
}

#[test]
fn correlation_start_finds_strong_regions() {
    let spec = tcgp_core::simgen::SimSpec2D { side: 32, n: 40, seed: 1, ..Default::default() };
    let sim = tcgp_core::simgen::generate_2d(&spec).unwrap();
    let (st, _) = started(&sim, 1);
    let regions = sim.truth.sign.iter().filter(|s| **s != 0).count();
    let found = (0..st.xi.len())
        .filter(|&v| sim.truth.sign[v] != 0 && st.xi[v].abs() > st.omega && st.xi[v].signum() as i8 == sim.truth.sign[v])
        .count();
    assert!(found * 5 >= regions * 4, "{found} of {regions} region voxels start active");
}
