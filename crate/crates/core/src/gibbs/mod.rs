//! Full-conditional Gibbs sampler.
//!
//! The sampler keeps per-voxel sufficient statistics of the subject fields
//! E±_i(v) = Σ_l e_{i,l,±}ψ_l(v) so that every conditional can be assembled
//! in O(m) (c_l and ω) or O(n·m) (e, τ²) time.

mod likelihood;

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::data::TransformedDataset;
use crate::error::{Error, Result};
use crate::kl::KLBasis;
use crate::model::{rho_from_xi, s_transform, threshold_g};
use crate::par::map_indexed;
use crate::params::{GibbsConfig, HyperParams, InitStrategy};
use crate::piecewise::{build, PiecewiseDensity, ThresholdTerm};
use crate::rng::{Purpose, Streams};
use crate::state::{Channel, ChainState};

pub use likelihood::{inverse_gamma_ln_pdf, joint_log_posterior};

/// Iteration numbers at and above this are reserved for warm-up sweeps, so
/// their random streams never collide with those of the main chain.
const WARM_UP_BASE: u64 = 1 << 48;
const WARM_UP_SWEEPS: u64 = 5;
/// Quantile of |ξ| used as the starting ω of a correlation start.
const START_QUANTILE: f64 = 0.8;

/// Bounds on τ² draws taken from the (very diffuse) prior at initialization.
const TAU_INIT_RANGE: (f64, f64) = (1e-6, 1e6);

/// Per-voxel sufficient statistics of one channel's subject fields:
/// Σ_i E_i², Σ_i Y_own,i E_i and Σ_i Y_other,i E_i.
#[derive(Debug, Clone)]
struct ChannelStats {
    ss: Vec<f64>,
    own: Vec<f64>,
    other: Vec<f64>,
}

impl ChannelStats {
    fn zeros(m: usize) -> Self {
        Self {
            ss: vec![0.0; m],
            own: vec![0.0; m],
            other: vec![0.0; m],
        }
    }
}

/// Parameters of the two inverse-gamma conditionals at one voxel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauConditional {
    pub shape: f64,
    pub scale1: f64,
    pub scale2: f64,
}

/// Normal conditional of e_{i,l,±} for every subject i. The precision does
/// not depend on i.
#[derive(Debug, Clone, PartialEq)]
pub struct EConditional {
    pub precision: f64,
    pub means: Vec<f64>,
}

/// Gibbs sampler state together with its caches.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    data: TransformedDataset,
    basis: &'a KLBasis,
    hp: HyperParams,
    adaptive_omega: bool,
    streams: Streams,
    state: ChainState,
    omega_range: (f64, f64),
    field_plus: Vec<f64>,
    field_minus: Vec<f64>,
    stats_plus: ChannelStats,
    stats_minus: ChannelStats,
    r: Vec<f64>,
    inv_k: Vec<f64>,
    degenerate_omega: usize,
}

impl<'a> Sampler<'a> {
    /// Validates inputs and draws the initial state from the prior.
    pub fn new(
        data: TransformedDataset,
        basis: &'a KLBasis,
        hp: &HyperParams,
        adaptive_omega: bool,
    ) -> Result<Self> {
        hp.validate()?;
        if data.m() != basis.m() {
            return Err(Error::Shape(alloc::format!(
                "data has {} voxels, basis has {}",
                data.m(),
                basis.m()
            )));
        }
        if data.n() < 2 {
            return Err(Error::InvalidParam("at least 2 subjects are required".into()));
        }
        let n = data.n();
        let m = data.m();
        let mut sampler = Self {
            state: ChainState::zeros(n, basis),
            data,
            basis,
            hp: hp.clone(),
            adaptive_omega,
            streams: Streams::new(hp.seed),
            omega_range: (0.0, 0.0),
            field_plus: vec![0.0; n * m],
            field_minus: vec![0.0; n * m],
            stats_plus: ChannelStats::zeros(m),
            stats_minus: ChannelStats::zeros(m),
            r: vec![0.0; m],
            inv_k: vec![0.0; m],
            degenerate_omega: 0,
        };
        sampler.init_from_prior();
        Ok(sampler)
    }

    fn init_from_prior(&mut self) {
        let mut rng = self.streams.stream(Purpose::Init, 0, 0);
        let n = self.data.n();
        let lambda = self.basis.lambda();
        let l_len = lambda.len();
        for l in 0..l_len {
            self.state.c[l] = libm::sqrt(lambda[l]) * rng.sample::<f64, _>(StandardNormal);
        }
        for i in 0..n {
            for l in 0..l_len {
                self.state.e_plus[i * l_len + l] = libm::sqrt(lambda[l]) * rng.sample::<f64, _>(StandardNormal);
                self.state.e_minus[i * l_len + l] = libm::sqrt(lambda[l]) * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let gamma = Gamma::new(self.hp.a_tau, 1.0).expect("validated shape");
        let scale = n as f64 * self.hp.b_tau;
        for v in 0..self.data.m() {
            for t in [&mut self.state.tau1_sq[v], &mut self.state.tau2_sq[v]] {
                let g: f64 = gamma.sample(&mut rng);
                *t = (scale / g).clamp(TAU_INIT_RANGE.0, TAU_INIT_RANGE.1);
            }
        }
        self.state.refresh_xi(self.basis);
        self.omega_range = match (self.adaptive_omega, self.hp.omega_range) {
            (false, Some(range)) => range,
            _ => abs_quantiles(&self.state.xi, self.hp.omega_quantiles),
        };
        let (a, b) = self.omega_range;
        self.state.omega = a + (b - a) * rng.random::<f64>();
        self.refresh_caches();
    }

    /// Applies a start strategy on top of the prior draw made by [`Self::new`].
    pub fn initialize(&mut self, init: InitStrategy) {
        if init == InitStrategy::Correlation {
            self.start_from_correlations();
        }
    }

    fn start_from_correlations(&mut self) {
        let n = self.data.n();
        let m = self.data.m();
        let (y1, y2) = self.data.reconstruct();
        let project = |pair: &[usize]| -> Vec<f64> {
            let target: Vec<f64> = (0..m)
                .map(|v| {
                    let r = pearson((0..n).map(|i| (y1[i * m + v], y2[pair[i] * m + v])));
                    let r = r.clamp(-0.99, 0.99);
                    r.signum() * s_transform(r.abs(), 1.0, 1.0)
                })
                .collect();
            (0..self.basis.len())
                .map(|l| self.basis.psi_col(l).iter().zip(&target).map(|(p, t)| p * t).sum::<f64>() / m as f64)
                .collect()
        };
        let identity: Vec<usize> = (0..n).collect();
        self.state.c = project(&identity);
        self.state.refresh_xi(self.basis);

        // Re-pairing subjects keeps the spatial structure of each modality
        // but destroys their correlation. The start only switches on voxels
        // that stand out from what such a null pairing produces.
        let mut shuffled = identity;
        shuffled.shuffle(&mut self.streams.stream(Purpose::Init, 0, 1));
        let null_c = project(&shuffled);
        let null_peak = (0..m)
            .map(|v| (0..null_c.len()).map(|l| null_c[l] * self.basis.psi_col(l)[v]).sum::<f64>().abs())
            .fold(0.0, f64::max);

        if self.adaptive_omega || self.hp.omega_range.is_none() {
            self.omega_range = abs_quantiles(&self.state.xi, self.hp.omega_quantiles);
        }
        let (a, b) = self.omega_range;
        let quantile = abs_quantiles(&self.state.xi, (START_QUANTILE, 1.0)).0;
        self.state.omega = quantile.max(null_peak).clamp(a, b);
        self.state.e_plus.iter_mut().for_each(|x| *x = 0.0);
        self.state.e_minus.iter_mut().for_each(|x| *x = 0.0);
        self.refresh_caches();
        for k in 0..WARM_UP_SWEEPS {
            self.update_tau(WARM_UP_BASE + k);
            for l in 0..self.basis.len() {
                self.update_e(l, WARM_UP_BASE + k);
            }
        }
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn basis(&self) -> &KLBasis {
        self.basis
    }

    pub fn data(&self) -> &TransformedDataset {
        &self.data
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hp
    }

    /// Replaces the state; caches are rebuilt (ξ is recomputed from c).
    pub fn set_state(&mut self, state: ChainState) -> Result<()> {
        if state.len() != self.basis.len() || state.n() != self.data.n() || state.xi.len() != self.data.m() {
            return Err(Error::Shape("state does not match data and basis".into()));
        }
        self.state = state;
        self.state.refresh_xi(self.basis);
        self.refresh_caches();
        Ok(())
    }

    /// Swaps in new observations of the same shape.
    pub fn set_data(&mut self, data: TransformedDataset) -> Result<()> {
        if data.n() != self.data.n() || data.m() != self.data.m() {
            return Err(Error::Shape("replacement data has a different shape".into()));
        }
        self.data = data;
        self.refresh_caches();
        Ok(())
    }

    /// Current prior range (a_ω, b_ω) of ω.
    pub fn omega_range(&self) -> (f64, f64) {
        self.omega_range
    }

    pub fn set_omega_range(&mut self, range: (f64, f64)) {
        self.omega_range = range;
    }

    /// Number of ω updates skipped because a_ω = b_ω.
    pub fn degenerate_omega_updates(&self) -> usize {
        self.degenerate_omega
    }

    pub(crate) fn streams(&self) -> &Streams {
        &self.streams
    }

    /// Rebuilds subject fields, sufficient statistics and noise summaries.
    pub fn refresh_caches(&mut self) {
        let n = self.data.n();
        let m = self.data.m();
        let l_len = self.basis.len();
        for (field, e) in [
            (&mut self.field_plus, &self.state.e_plus),
            (&mut self.field_minus, &self.state.e_minus),
        ] {
            field.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..n {
                let row = &mut field[i * m..(i + 1) * m];
                for l in 0..l_len {
                    let coef = e[i * l_len + l];
                    for (x, &p) in row.iter_mut().zip(self.basis.psi_col(l)) {
                        *x += coef * p;
                    }
                }
            }
        }
        self.recompute_stats(Channel::Plus);
        self.recompute_stats(Channel::Minus);
        self.refresh_noise();
    }

    fn refresh_noise(&mut self) {
        for v in 0..self.data.m() {
            let (t1, t2) = (self.state.tau1_sq[v], self.state.tau2_sq[v]);
            self.r[v] = (t1 - t2) / (t1 + t2);
            // K = 2(1 − r²)u² = 2 t1 t2/(t1 + t2)
            self.inv_k[v] = (t1 + t2) / (2.0 * t1 * t2);
        }
    }

    fn recompute_stats(&mut self, ch: Channel) {
        let m = self.data.m();
        let (field, stats, own, other) = match ch {
            Channel::Plus => (&self.field_plus, &mut self.stats_plus, self.data.y_plus(), self.data.y_minus()),
            Channel::Minus => (&self.field_minus, &mut self.stats_minus, self.data.y_minus(), self.data.y_plus()),
        };
        accumulate_stats(m, field, own, other, stats);
    }

    /// Log-likelihood of voxel v relative to the fully inactive state, at a
    /// latent value `xi` and threshold `omega`.
    #[inline]
    pub(crate) fn voxel_loglik(&self, v: usize, xi: f64, omega: f64) -> f64 {
        if xi > omega {
            channel_loglik(&self.stats_plus, v, xi, self.r[v], self.inv_k[v])
        } else if -xi > omega {
            channel_loglik(&self.stats_minus, v, -xi, self.r[v], self.inv_k[v])
        } else {
            0.0
        }
    }

    /// Inverse-gamma conditional parameters of (τ1²(v), τ2²(v)).
    pub fn tau_conditional(&self, v: usize) -> TauConditional {
        let (s1, s2) = self.residual_sums(v);
        let n = self.data.n() as f64;
        TauConditional {
            shape: self.hp.a_tau + 0.5 * n,
            scale1: 0.5 * s1 + n * self.hp.b_tau,
            scale2: 0.5 * s2 + n * self.hp.b_tau,
        }
    }

    fn residual_sums(&self, v: usize) -> (f64, f64) {
        let m = self.data.m();
        let sp = threshold_g(self.state.xi[v], self.state.omega);
        let sm = threshold_g(-self.state.xi[v], self.state.omega);
        let (yp, ym) = (self.data.y_plus(), self.data.y_minus());
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for i in 0..self.data.n() {
            let k = i * m + v;
            let a = yp[k] - sp * self.field_plus[k];
            let b = ym[k] - sm * self.field_minus[k];
            s1 += (a + b) * (a + b);
            s2 += (a - b) * (a - b);
        }
        (s1, s2)
    }

    /// Draws every τ1²(v), τ2²(v) from its conditional.
    pub fn update_tau(&mut self, iteration: u64) {
        let m = self.data.m();
        let n = self.data.n();
        let mut s1 = vec![0.0; m];
        let mut s2 = vec![0.0; m];
        let (yp, ym) = (self.data.y_plus(), self.data.y_minus());
        let sp: Vec<f64> = self.state.xi.iter().map(|&x| threshold_g(x, self.state.omega)).collect();
        let sm: Vec<f64> = self.state.xi.iter().map(|&x| threshold_g(-x, self.state.omega)).collect();
        for i in 0..n {
            let rows = i * m..(i + 1) * m;
            let (yp, ym) = (&yp[rows.clone()], &ym[rows.clone()]);
            let (fp, fm) = (&self.field_plus[rows.clone()], &self.field_minus[rows]);
            for v in 0..m {
                let a = yp[v] - sp[v] * fp[v];
                let b = ym[v] - sm[v] * fm[v];
                s1[v] += (a + b) * (a + b);
                s2[v] += (a - b) * (a - b);
            }
        }
        let shape = self.hp.a_tau + 0.5 * n as f64;
        let base = n as f64 * self.hp.b_tau;
        let gamma = Gamma::new(shape, 1.0).expect("positive shape");
        let streams = &self.streams;
        let draws = map_indexed(m, |v| {
            let mut rng = streams.stream(Purpose::Tau, iteration, v as u64);
            let g1: f64 = gamma.sample(&mut rng);
            let g2: f64 = gamma.sample(&mut rng);
            ((0.5 * s1[v] + base) / g1, (0.5 * s2[v] + base) / g2)
        });
        for (v, (t1, t2)) in draws.into_iter().enumerate() {
            self.state.tau1_sq[v] = t1;
            self.state.tau2_sq[v] = t2;
        }
        self.refresh_noise();
    }

    /// Thresholded quadratic terms of the c_l conditional, over `voxels` (all
    /// voxels when `None`), including the prior base term.
    pub fn coef_terms(&self, l: usize, voxels: Option<&[usize]>) -> Vec<ThresholdTerm> {
        let psi = self.basis.psi_col(l);
        let c_l = self.state.c[l];
        let omega = self.state.omega;
        let count = voxels.map_or(self.data.m(), |b| b.len());
        let mut terms = Vec::with_capacity(2 * count + 1);
        terms.push(ThresholdTerm::base(-0.5 / self.basis.lambda()[l], 0.0, 0.0));
        let mut push_voxel = |v: usize| {
            let p = psi[v];
            if p == 0.0 {
                return;
            }
            let rest = self.state.xi[v] - c_l * p;
            let ik = self.inv_k[v];
            let r = self.r[v];
            // positive channel: σ = pc + rest, active when pc + rest > ω
            let s = &self.stats_plus;
            let (ss, b) = (s.ss[v], s.own[v] - r * s.other[v]);
            if ss != 0.0 || b != 0.0 {
                let a1 = -ss * p * p * ik;
                let a2 = -2.0 * p * (ss * rest - b) * ik;
                let a3 = -rest * (ss * rest - 2.0 * b) * ik;
                let t = (omega - rest) / p;
                terms.push(if p > 0.0 {
                    ThresholdTerm::above(t, a1, a2, a3)
                } else {
                    ThresholdTerm::below(t, a1, a2, a3)
                });
            }
            // negative channel: σ = −(pc + rest), active when pc + rest < −ω
            let s = &self.stats_minus;
            let (ss, b) = (s.ss[v], s.own[v] - r * s.other[v]);
            if ss != 0.0 || b != 0.0 {
                let a1 = -ss * p * p * ik;
                let a2 = -2.0 * p * (ss * rest + b) * ik;
                let a3 = -rest * (ss * rest + 2.0 * b) * ik;
                let t = (-omega - rest) / p;
                terms.push(if p > 0.0 {
                    ThresholdTerm::below(t, a1, a2, a3)
                } else {
                    ThresholdTerm::above(t, a1, a2, a3)
                });
            }
        };
        match voxels {
            Some(batch) => batch.iter().for_each(|&v| push_voxel(v)),
            None => (0..self.data.m()).for_each(&mut push_voxel),
        }
        terms
    }

    pub fn coef_density(&self, l: usize, voxels: Option<&[usize]>) -> Result<PiecewiseDensity> {
        build(&self.coef_terms(l, voxels), None)
    }

    /// Writes c_l and shifts the cached ξ accordingly.
    pub(crate) fn set_coef(&mut self, l: usize, value: f64) {
        let delta = value - self.state.c[l];
        self.state.c[l] = value;
        for (x, &p) in self.state.xi.iter_mut().zip(self.basis.psi_col(l)) {
            *x += delta * p;
        }
    }

    pub(crate) fn set_coef_with_xi(&mut self, l: usize, value: f64, xi: &[f64]) {
        self.state.c[l] = value;
        self.state.xi.copy_from_slice(xi);
    }

    /// Re-derives ξ from c to stop rounding drift of the incremental updates.
    pub fn finish_iteration(&mut self) {
        self.state.refresh_xi(self.basis);
    }

    pub fn update_coef(&mut self, l: usize, iteration: u64) -> Result<()> {
        let density = self.coef_density(l, None)?;
        let mut rng = self.streams.stream(Purpose::Coef, iteration, l as u64);
        let value = density.sample(&mut rng);
        self.set_coef(l, value);
        Ok(())
    }

    /// Refreshes (a_ω, b_ω) from the configured quantiles of |ξ| when ω is
    /// adaptive.
    pub fn refresh_omega_range(&mut self) {
        if self.adaptive_omega {
            self.omega_range = abs_quantiles(&self.state.xi, self.hp.omega_quantiles);
        }
    }

    /// Constant thresholded terms of the ω conditional on [a_ω, b_ω].
    pub fn omega_terms(&self, voxels: Option<&[usize]>) -> Vec<ThresholdTerm> {
        let (a, b) = self.omega_range;
        let mut terms = Vec::new();
        let mut push_voxel = |v: usize| {
            let x = self.state.xi[v];
            let (ch, mag) = if x > 0.0 { (&self.stats_plus, x) } else { (&self.stats_minus, -x) };
            if a < mag && mag < b {
                let ll = channel_loglik(ch, v, mag, self.r[v], self.inv_k[v]);
                terms.push(ThresholdTerm::below(mag, 0.0, 0.0, ll));
            }
        };
        match voxels {
            Some(batch) => batch.iter().for_each(|&v| push_voxel(v)),
            None => (0..self.data.m()).for_each(&mut push_voxel),
        }
        terms
    }

    /// `None` when the prior range of ω is degenerate.
    pub fn omega_density(&self, voxels: Option<&[usize]>) -> Result<Option<PiecewiseDensity>> {
        let (a, b) = self.omega_range;
        if !(a < b) {
            return Ok(None);
        }
        build(&self.omega_terms(voxels), Some((a, b))).map(Some)
    }

    pub fn update_omega(&mut self, l: usize, iteration: u64) -> Result<()> {
        self.refresh_omega_range();
        match self.omega_density(None)? {
            Some(density) => {
                let mut rng = self.streams.stream(Purpose::Omega, iteration, l as u64);
                self.state.omega = density.sample(&mut rng);
            }
            None => self.note_degenerate_omega(),
        }
        Ok(())
    }

    pub(crate) fn note_degenerate_omega(&mut self) {
        self.degenerate_omega += 1;
        log::warn!(
            "omega prior range collapsed to {:?}; keeping omega = {}",
            self.omega_range,
            self.state.omega
        );
    }

    pub(crate) fn set_omega(&mut self, omega: f64) {
        self.state.omega = omega;
    }

    /// Normal conditionals of e_{i,l,ch} for all subjects.
    pub fn e_conditional(&self, l: usize, ch: Channel) -> EConditional {
        let n = self.data.n();
        let m = self.data.m();
        let psi = self.basis.psi_col(l);
        let l_len = self.basis.len();
        let omega = self.state.omega;
        let (own, other, field, e) = match ch {
            Channel::Plus => (self.data.y_plus(), self.data.y_minus(), &self.field_plus, &self.state.e_plus),
            Channel::Minus => (self.data.y_minus(), self.data.y_plus(), &self.field_minus, &self.state.e_minus),
        };
        // per active voxel: (v, σ, Cw = 2σψ/K, r)
        let mut active = Vec::new();
        let mut precision = 1.0 / self.basis.lambda()[l];
        for v in 0..m {
            let x = match ch {
                Channel::Plus => self.state.xi[v],
                Channel::Minus => -self.state.xi[v],
            };
            let sigma = threshold_g(x, omega);
            if sigma > 0.0 && psi[v] != 0.0 {
                let c = sigma * psi[v];
                let w = 2.0 * self.inv_k[v];
                precision += c * c * w;
                active.push((v, sigma, c * w, self.r[v]));
            }
        }
        let means = (0..n)
            .map(|i| {
                let e_old = e[i * l_len + l];
                let row = i * m;
                let lin: f64 = active
                    .iter()
                    .map(|&(v, sigma, cw, r)| {
                        let k = row + v;
                        cw * (own[k] - sigma * (field[k] - e_old * psi[v]) - r * other[k])
                    })
                    .sum();
                lin / precision
            })
            .collect();
        EConditional { precision, means }
    }

    /// Draws e_{·,l,+} and e_{·,l,−} and refreshes the dependent caches.
    pub fn update_e(&mut self, l: usize, iteration: u64) {
        let n = self.data.n();
        let l_len = self.basis.len();
        for (k, ch) in [Channel::Plus, Channel::Minus].into_iter().enumerate() {
            let cond = self.e_conditional(l, ch);
            let sd = 1.0 / libm::sqrt(cond.precision);
            let streams = &self.streams;
            let base = (l * 2 + k) * n;
            let draws = map_indexed(n, |i| {
                let mut rng = streams.stream(Purpose::E, iteration, (base + i) as u64);
                cond.means[i] + sd * rng.sample::<f64, _>(StandardNormal)
            });
            let e = match ch {
                Channel::Plus => &mut self.state.e_plus,
                Channel::Minus => &mut self.state.e_minus,
            };
            let delta: Vec<f64> = (0..n)
                .map(|i| {
                    let d = draws[i] - e[i * l_len + l];
                    e[i * l_len + l] = draws[i];
                    d
                })
                .collect();
            self.shift_field(ch, l, &delta);
        }
    }

    fn shift_field(&mut self, ch: Channel, l: usize, delta: &[f64]) {
        let m = self.data.m();
        let psi = self.basis.psi_col(l);
        let field = match ch {
            Channel::Plus => &mut self.field_plus,
            Channel::Minus => &mut self.field_minus,
        };
        for (i, &d) in delta.iter().enumerate() {
            for (x, &p) in field[i * m..(i + 1) * m].iter_mut().zip(psi) {
                *x += d * p;
            }
        }
        self.recompute_stats(ch);
    }

    /// One full iteration: τ², then for each l the updates of c_l, ω and e.
    pub fn step(&mut self, iteration: u64) -> Result<()> {
        self.update_tau(iteration);
        for l in 0..self.basis.len() {
            self.update_coef(l, iteration)?;
            self.update_omega(l, iteration)?;
            self.update_e(l, iteration);
        }
        self.finish_iteration();
        Ok(())
    }

    pub fn joint_log_posterior(&self) -> f64 {
        joint_log_posterior(&self.state, &self.data, self.basis, &self.hp, self.omega_range)
    }
}

/// Sample correlation of paired observations; 0 when either side is constant.
fn pearson(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let (mut n, mut sa, mut sb) = (0.0, 0.0, 0.0);
    for (a, b) in pairs.clone() {
        n += 1.0;
        sa += a;
        sb += b;
    }
    let (ma, mb) = (sa / n, sb / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in pairs {
        sab += (a - ma) * (b - mb);
        saa += (a - ma) * (a - ma);
        sbb += (b - mb) * (b - mb);
    }
    let den = libm::sqrt(saa * sbb);
    if den > 0.0 {
        sab / den
    } else {
        0.0
    }
}

fn accumulate_stats(m: usize, field: &[f64], own: &[f64], other: &[f64], stats: &mut ChannelStats) {
    stats.ss.iter_mut().for_each(|x| *x = 0.0);
    stats.own.iter_mut().for_each(|x| *x = 0.0);
    stats.other.iter_mut().for_each(|x| *x = 0.0);
    for ((f, yo), yt) in field.chunks_exact(m).zip(own.chunks_exact(m)).zip(other.chunks_exact(m)) {
        for v in 0..m {
            let e = f[v];
            stats.ss[v] += e * e;
            stats.own[v] += yo[v] * e;
            stats.other[v] += yt[v] * e;
        }
    }
}

#[inline]
fn channel_loglik(s: &ChannelStats, v: usize, sigma: f64, r: f64, inv_k: f64) -> f64 {
    let b = s.own[v] - r * s.other[v];
    -(sigma * (sigma * s.ss[v] - 2.0 * b)) * inv_k
}

/// Quantiles (type 7) of |x| at the two requested levels.
pub fn abs_quantiles(x: &[f64], (q_lo, q_hi): (f64, f64)) -> (f64, f64) {
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    a.sort_unstable_by(f64::total_cmp);
    let at = |q: f64| {
        let h = q * (a.len() - 1) as f64;
        let lo = libm::floor(h) as usize;
        let hi = (lo + 1).min(a.len() - 1);
        a[lo] + (h - lo as f64) * (a[hi] - a[lo])
    };
    (at(q_lo), at(q_hi))
}

/// Draws kept by a sampler run.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub m: usize,
    pub l: usize,
    pub kept: usize,
    /// kept × L
    pub c: Vec<f64>,
    pub omega: Vec<f64>,
    /// kept × m correlation maps; nonzero exactly where a voxel is active.
    pub rho: Vec<f64>,
    pub pip_plus_count: Vec<u32>,
    pub pip_minus_count: Vec<u32>,
    /// Joint log-posterior at every kept iteration.
    pub log_posterior: Vec<f64>,
    /// (iteration, τ1², τ2²) snapshots when tracing is enabled.
    pub tau_trace: Vec<(u64, Vec<f64>, Vec<f64>)>,
    /// (iteration, e₊, e₋) snapshots when tracing is enabled.
    pub e_trace: Vec<(u64, Vec<f64>, Vec<f64>)>,
}

impl PosteriorSamples {
    pub(crate) fn new(m: usize, l: usize) -> Self {
        Self {
            m,
            l,
            kept: 0,
            c: Vec::new(),
            omega: Vec::new(),
            rho: Vec::new(),
            pip_plus_count: vec![0; m],
            pip_minus_count: vec![0; m],
            log_posterior: Vec::new(),
            tau_trace: Vec::new(),
            e_trace: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, sampler: &Sampler<'_>, iteration: u64, trace_every: usize) {
        let st = sampler.state();
        self.c.extend_from_slice(&st.c);
        self.omega.push(st.omega);
        for v in 0..self.m {
            let rho = rho_from_xi(st.xi[v], st.omega, st.tau1_sq[v], st.tau2_sq[v]);
            if rho > 0.0 {
                self.pip_plus_count[v] += 1;
            } else if rho < 0.0 {
                self.pip_minus_count[v] += 1;
            }
            self.rho.push(rho);
        }
        self.log_posterior.push(sampler.joint_log_posterior());
        if trace_every > 0 && self.kept % trace_every == 0 {
            self.tau_trace.push((iteration, st.tau1_sq.clone(), st.tau2_sq.clone()));
            self.e_trace.push((iteration, st.e_plus.clone(), st.e_minus.clone()));
        }
        self.kept += 1;
    }

    /// Correlation map of kept draw k.
    pub fn rho_map(&self, k: usize) -> &[f64] {
        &self.rho[k * self.m..(k + 1) * self.m]
    }

    pub fn coefficients(&self, k: usize) -> &[f64] {
        &self.c[k * self.l..(k + 1) * self.l]
    }
}

pub(crate) fn is_kept(t: usize, burn_in: usize, thin: usize) -> bool {
    t > burn_in && (t - burn_in) % thin == 0
}

/// Runs the full-conditional Gibbs sampler, starting where `cfg.init` says.
pub fn run_gibbs(
    data: &TransformedDataset,
    basis: &KLBasis,
    hp: &HyperParams,
    cfg: &GibbsConfig,
) -> Result<PosteriorSamples> {
    cfg.validate()?;
    let mut sampler = Sampler::new(data.clone(), basis, hp, cfg.adaptive_omega)?;
    sampler.initialize(cfg.init);
    let mut out = PosteriorSamples::new(data.m(), basis.len());
    for t in 1..=cfg.n_iter {
        sampler.step(t as u64)?;
        if is_kept(t, cfg.burn_in, cfg.thin) {
            out.record(&sampler, t as u64, cfg.trace_every);
        }
    }
    Ok(out)
}
