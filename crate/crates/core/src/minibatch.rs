//! Hybrid mini-batch sampler: c_l and ω are proposed from conditionals built
//! on a random subset of voxels and corrected by a Metropolis-Hastings step
//! over the remaining voxels; every `full_period`-th iteration uses all voxels.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::data::TransformedDataset;
use crate::error::Result;
use crate::gibbs::{is_kept, PosteriorSamples, Sampler};
use crate::grid::GridDomain;
use crate::kl::KLBasis;
use crate::params::{HybridConfig, HyperParams};
use crate::rng::Purpose;

/// Monotonic wall-clock source in seconds.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// A clock that never advances, for `no_std` callers.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

/// Sorted uniform sample of `m_s` distinct voxel indices.
pub fn subsample_batch<R: Rng + ?Sized>(grid_m: usize, m_s: usize, rng: &mut R) -> Vec<usize> {
    let mut idx = rand::seq::index::sample(rng, grid_m, m_s).into_vec();
    idx.sort_unstable();
    idx
}

/// Convenience wrapper taking the grid.
pub fn subsample_grid<R: Rng + ?Sized>(grid: &GridDomain, m_s: usize, rng: &mut R) -> Vec<usize> {
    subsample_batch(grid.m(), m_s, rng)
}

/// Wall-clock seconds spent in each phase of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseTimes {
    pub tau: f64,
    pub coef_omega_full: f64,
    pub coef_omega_batch: f64,
    pub e: f64,
    pub record: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HybridDiagnostics {
    /// Mean acceptance probability of each iteration; `None` on full sweeps.
    pub acceptance: Vec<Option<f64>>,
    pub mean_acceptance: f64,
    pub times: PhaseTimes,
    pub full_iterations: usize,
    pub batch_iterations: usize,
    pub degenerate_omega_updates: usize,
}

/// Parameter proposed in a batch step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Proposal {
    Coef { l: usize, value: f64 },
    Omega(f64),
}

/// Complement-voxel Metropolis-Hastings machinery for one sampler.
#[derive(Debug)]
pub struct BatchStep<'s, 'a> {
    sampler: &'s mut Sampler<'a>,
    in_batch: Vec<bool>,
    batch: Vec<usize>,
    current: Vec<f64>,
    proposed: Vec<f64>,
    xi_new: Vec<f64>,
}

impl<'s, 'a> BatchStep<'s, 'a> {
    pub fn new(sampler: &'s mut Sampler<'a>, batch: Vec<usize>) -> Self {
        let m = sampler.data().m();
        let mut in_batch = vec![false; m];
        for &v in &batch {
            in_batch[v] = true;
        }
        let mut step = Self {
            sampler,
            in_batch,
            batch,
            current: vec![0.0; m],
            proposed: vec![0.0; m],
            xi_new: vec![0.0; m],
        };
        step.refresh();
        step
    }

    pub fn sampler(&self) -> &Sampler<'a> {
        self.sampler
    }

    pub fn batch(&self) -> &[usize] {
        &self.batch
    }

    /// Recomputes cached per-voxel log-likelihoods; needed after anything
    /// other than c or ω changes.
    pub fn refresh(&mut self) {
        let st = self.sampler.state();
        let omega = st.omega;
        for v in 0..self.current.len() {
            self.current[v] = self.sampler.voxel_loglik(v, st.xi[v], omega);
        }
    }

    /// log of the complement likelihood ratio for a proposal; leaves the
    /// proposed per-voxel terms staged for [`Self::accept`].
    pub fn log_ratio(&mut self, proposal: Proposal) -> f64 {
        let st = self.sampler.state();
        let mut acc = 0.0;
        match proposal {
            Proposal::Coef { l, value } => {
                let delta = value - st.c[l];
                let psi = self.sampler.basis().psi_col(l);
                for v in 0..self.current.len() {
                    let x = st.xi[v] + delta * psi[v];
                    self.xi_new[v] = x;
                    let ll = self.sampler.voxel_loglik(v, x, st.omega);
                    self.proposed[v] = ll;
                    if !self.in_batch[v] {
                        acc += ll - self.current[v];
                    }
                }
            }
            Proposal::Omega(w) => {
                for v in 0..self.current.len() {
                    let ll = self.sampler.voxel_loglik(v, st.xi[v], w);
                    self.proposed[v] = ll;
                    if !self.in_batch[v] {
                        acc += ll - self.current[v];
                    }
                }
            }
        }
        acc
    }

    /// min(1, complement likelihood ratio).
    pub fn accept_ratio(&mut self, proposal: Proposal) -> f64 {
        let lr = self.log_ratio(proposal);
        if lr >= 0.0 {
            1.0
        } else {
            libm::exp(lr)
        }
    }

    /// Commits the staged proposal.
    pub fn accept(&mut self, proposal: Proposal) {
        match proposal {
            Proposal::Coef { l, value } => self.sampler.set_coef_with_xi(l, value, &self.xi_new),
            Proposal::Omega(w) => self.sampler.set_omega(w),
        }
        core::mem::swap(&mut self.current, &mut self.proposed);
    }

    /// Proposes c_l from the batch conditional and accepts or rejects it.
    /// Returns the acceptance probability.
    pub fn coef(&mut self, l: usize, iteration: u64) -> Result<f64> {
        let density = self.sampler.coef_density(l, Some(&self.batch))?;
        let mut rng = self.sampler.streams().stream(Purpose::Coef, iteration, l as u64);
        let value = density.sample(&mut rng);
        let proposal = Proposal::Coef { l, value };
        self.decide(proposal, iteration, 2 * l as u64)
    }

    /// Proposes ω from the batch conditional. Returns `None` when the prior
    /// range of ω is degenerate and ω is left unchanged.
    pub fn omega(&mut self, l: usize, iteration: u64) -> Result<Option<f64>> {
        self.sampler.refresh_omega_range();
        let density = match self.sampler.omega_density(Some(&self.batch))? {
            Some(d) => d,
            None => {
                self.sampler.note_degenerate_omega();
                return Ok(None);
            }
        };
        let mut rng = self.sampler.streams().stream(Purpose::Omega, iteration, l as u64);
        let w = density.sample(&mut rng);
        self.decide(Proposal::Omega(w), iteration, 2 * l as u64 + 1).map(Some)
    }

    fn decide(&mut self, proposal: Proposal, iteration: u64, task: u64) -> Result<f64> {
        let lr = self.log_ratio(proposal);
        let phi = if lr >= 0.0 { 1.0 } else { libm::exp(lr) };
        let accept = lr >= 0.0 || {
            let mut rng = self.sampler.streams().stream(Purpose::Accept, iteration, task);
            libm::log(rng.random::<f64>()) < lr
        };
        if accept {
            self.accept(proposal);
        }
        Ok(phi)
    }
}

/// Runs the hybrid mini-batch sampler, starting where `cfg.init` says.
pub fn run_hybrid(
    data: &TransformedDataset,
    basis: &KLBasis,
    hp: &HyperParams,
    cfg: &HybridConfig,
    clock: &dyn Clock,
) -> Result<(PosteriorSamples, HybridDiagnostics)> {
    let m = data.m();
    cfg.validate(m)?;
    let m_s = cfg.batch_size_for(m);
    let mut sampler = Sampler::new(data.clone(), basis, hp, cfg.adaptive_omega)?;
    sampler.initialize(cfg.init);
    let mut out = PosteriorSamples::new(m, basis.len());
    let mut diag = HybridDiagnostics::default();
    let mut phi_sum = 0.0;
    let mut phi_count = 0usize;
    for t in 1..=cfg.n_iter {
        let iteration = t as u64;
        let t0 = clock.seconds();
        sampler.update_tau(iteration);
        diag.times.tau += clock.seconds() - t0;
        if t % cfg.full_period == 0 {
            for l in 0..basis.len() {
                let t0 = clock.seconds();
                sampler.update_coef(l, iteration)?;
                sampler.update_omega(l, iteration)?;
                diag.times.coef_omega_full += clock.seconds() - t0;
                let t0 = clock.seconds();
                sampler.update_e(l, iteration);
                diag.times.e += clock.seconds() - t0;
            }
            diag.full_iterations += 1;
            diag.acceptance.push(None);
        } else {
            let mut rng = sampler.streams().stream(Purpose::Batch, iteration, 0);
            let batch = subsample_batch(m, m_s, &mut rng);
            let mut iter_sum = 0.0;
            let mut iter_count = 0usize;
            let mut batch_time = 0.0;
            let mut e_time = 0.0;
            {
                let mut step = BatchStep::new(&mut sampler, batch);
                for l in 0..basis.len() {
                    let t0 = clock.seconds();
                    if l > 0 {
                        step.refresh();
                    }
                    iter_sum += step.coef(l, iteration)?;
                    iter_count += 1;
                    if let Some(phi) = step.omega(l, iteration)? {
                        iter_sum += phi;
                        iter_count += 1;
                    }
                    batch_time += clock.seconds() - t0;
                    let t0 = clock.seconds();
                    step.sampler.update_e(l, iteration);
                    e_time += clock.seconds() - t0;
                }
            }
            diag.times.coef_omega_batch += batch_time;
            diag.times.e += e_time;
            phi_sum += iter_sum;
            phi_count += iter_count;
            diag.batch_iterations += 1;
            diag.acceptance
                .push((iter_count > 0).then(|| iter_sum / iter_count as f64));
        }
        sampler.finish_iteration();
        if is_kept(t, cfg.burn_in, cfg.thin) {
            let t0 = clock.seconds();
            out.record(&sampler, iteration, cfg.trace_every);
            diag.times.record += clock.seconds() - t0;
        }
    }
    diag.mean_acceptance = if phi_count > 0 { phi_sum / phi_count as f64 } else { f64::NAN };
    diag.degenerate_omega_updates = sampler.degenerate_omega_updates();
    Ok((out, diag))
}
