//! Each implemented full conditional must differ from the joint
//! log-posterior by a constant when viewed as a function of its parameter.
//! The functions return the largest variance of that difference.

use rand::Rng;
use tcgp_core::gibbs::inverse_gamma_ln_pdf;
use tcgp_core::state::Channel;
use tcgp_core::{ChainState, Sampler};

use super::{rng, Toy};

const STATES: u64 = 20;
const POINTS: usize = 50;

pub fn variance(xs: &[f64]) -> f64 {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64
}

fn joint_at(sampler: &mut Sampler<'_>, state: ChainState) -> f64 {
    sampler.set_state(state).unwrap();
    sampler.joint_log_posterior()
}

pub fn toy() -> Toy {
    Toy::new(&[3, 4], 5, 0.3, 0.95, 11)
}

pub fn coefficient_conditional(toy: &Toy) -> f64 {
    let mut sampler = toy.sampler();
    let mut worst: f64 = 0.0;
    for s in 0..STATES {
        let state = toy.random_state(100 + s);
        let mut r = rng(200 + s);
        for l in 0..toy.basis.len() {
            sampler.set_state(state.clone()).unwrap();
            let density = sampler.coef_density(l, None).unwrap();
            let diffs: Vec<f64> = (0..POINTS)
                .map(|_| {
                    let x = state.c[l] + 3.0 * (r.random::<f64>() - 0.5);
                    let mut st = state.clone();
                    st.c[l] = x;
                    joint_at(&mut sampler, st) - density.log_density(x)
                })
                .collect();
            worst = worst.max(variance(&diffs));
        }
    }
    worst
}

pub fn omega_conditional(toy: &Toy) -> f64 {
    let mut sampler = toy.sampler();
    let mut worst: f64 = 0.0;
    for s in 0..STATES {
        let state = toy.random_state(300 + s);
        sampler.set_state(state.clone()).unwrap();
        let (a, b) = sampler.omega_range();
        let density = sampler.omega_density(None).unwrap().unwrap();
        let mut r = rng(400 + s);
        let diffs: Vec<f64> = (0..POINTS)
            .map(|_| {
                let w = a + (b - a) * r.random::<f64>();
                let mut st = state.clone();
                st.omega = w;
                joint_at(&mut sampler, st) - density.log_density(w)
            })
            .collect();
        worst = worst.max(variance(&diffs));
    }
    worst
}

pub fn subject_coefficient_conditional(toy: &Toy) -> f64 {
    let mut sampler = toy.sampler();
    let n = toy.data.n();
    let len = toy.basis.len();
    let mut worst: f64 = 0.0;
    for s in 0..STATES {
        let state = toy.random_state(500 + s);
        let mut r = rng(600 + s);
        for ch in [Channel::Plus, Channel::Minus] {
            let l = r.random_range(0..len);
            let i = r.random_range(0..n);
            sampler.set_state(state.clone()).unwrap();
            let cond = sampler.e_conditional(l, ch);
            let diffs: Vec<f64> = (0..POINTS)
                .map(|_| {
                    let x = 4.0 * (r.random::<f64>() - 0.5);
                    let mut st = state.clone();
                    match ch {
                        Channel::Plus => st.e_plus[i * len + l] = x,
                        Channel::Minus => st.e_minus[i * len + l] = x,
                    }
                    let ln_cond = -0.5 * cond.precision * (x - cond.means[i]).powi(2);
                    joint_at(&mut sampler, st) - ln_cond
                })
                .collect();
            worst = worst.max(variance(&diffs));
        }
    }
    worst
}

pub fn noise_variance_conditional(toy: &Toy) -> f64 {
    let mut sampler = toy.sampler();
    let m = toy.data.m();
    let mut worst: f64 = 0.0;
    for s in 0..STATES {
        let state = toy.random_state(700 + s);
        let mut r = rng(800 + s);
        let v = r.random_range(0..m);
        sampler.set_state(state.clone()).unwrap();
        let cond = sampler.tau_conditional(v);
        for first in [true, false] {
            let diffs: Vec<f64> = (0..POINTS)
                .map(|_| {
                    let t = 0.05 + 5.0 * r.random::<f64>();
                    let mut st = state.clone();
                    let scale = if first {
                        st.tau1_sq[v] = t;
                        cond.scale1
                    } else {
                        st.tau2_sq[v] = t;
                        cond.scale2
                    };
                    joint_at(&mut sampler, st) - inverse_gamma_ln_pdf(t, cond.shape, scale)
                })
                .collect();
            worst = worst.max(variance(&diffs));
        }
    }
    worst
}
