#![allow(dead_code)]

pub mod geweke;
pub mod joint;
pub mod ks;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tcgp_core::{
    transform_data, ChainState, GridDomain, HyperParams, ImageDataset, KLBasis, Sampler, TransformedDataset,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Small grid, dense basis and random data.
pub struct Toy {
    pub grid: GridDomain,
    pub basis: KLBasis,
    pub data: TransformedDataset,
    pub hp: HyperParams,
}

impl Toy {
    pub fn new(dims: &[usize], n: usize, gamma2: f64, target: f64, seed: u64) -> Self {
        let grid = GridDomain::full(dims).unwrap();
        let hp = HyperParams {
            gamma2,
            kl_variance_target: target,
            omega_range: Some((0.0, 4.0)),
            seed,
            ..Default::default()
        };
        let basis = KLBasis::build(&grid, &hp).unwrap();
        let m = grid.m();
        let mut r = rng(seed ^ 0xda7a);
        let y1: Vec<f64> = (0..n * m).map(|_| normal(&mut r)).collect();
        let y2: Vec<f64> = (0..n * m).map(|k| 0.5 * y1[k] + normal(&mut r)).collect();
        let data = transform_data(&ImageDataset::new(n, m, y1, y2).unwrap()).unwrap();
        Self { grid, basis, data, hp }
    }

    pub fn sampler(&self) -> Sampler<'_> {
        Sampler::new(self.data.clone(), &self.basis, &self.hp, false).unwrap()
    }

    /// A random state with a healthy mix of active and inactive voxels.
    pub fn random_state(&self, seed: u64) -> ChainState {
        let mut r = rng(seed);
        let n = self.data.n();
        let mut st = ChainState::zeros(n, &self.basis);
        let l = self.basis.len();
        for k in 0..l {
            st.c[k] = 1.5 * normal(&mut r);
        }
        for k in 0..n * l {
            st.e_plus[k] = normal(&mut r);
            st.e_minus[k] = normal(&mut r);
        }
        for v in 0..self.data.m() {
            st.tau1_sq[v] = 0.3 + 2.0 * r.random::<f64>();
            st.tau2_sq[v] = 0.3 + 2.0 * r.random::<f64>();
        }
        st.refresh_xi(&self.basis);
        let mut mags: Vec<f64> = st.xi.iter().map(|x| x.abs()).collect();
        mags.sort_by(f64::total_cmp);
        let k = mags.len() / 2;
        // halfway between two magnitudes so no voxel sits on the boundary
        st.omega = (0.5 * (mags[k - 1] + mags[k])).min(3.9);
        st
    }
}
