use alloc::vec;
use alloc::vec::Vec;

use crate::kl::{evaluate_basis, KLBasis};

/// All sampled parameters at one iteration.
///
/// `e_plus` and `e_minus` are n × L, subject-major. `xi` caches the basis
/// expansion of `c` and must be refreshed whenever `c` is written directly.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub c: Vec<f64>,
    pub e_plus: Vec<f64>,
    pub e_minus: Vec<f64>,
    pub tau1_sq: Vec<f64>,
    pub tau2_sq: Vec<f64>,
    pub omega: f64,
    pub xi: Vec<f64>,
    n: usize,
}

impl ChainState {
    /// All coefficients zero, unit noise variances, ω = 0.
    pub fn zeros(n: usize, basis: &KLBasis) -> Self {
        let l = basis.len();
        let m = basis.m();
        Self {
            c: vec![0.0; l],
            e_plus: vec![0.0; n * l],
            e_minus: vec![0.0; n * l],
            tau1_sq: vec![1.0; m],
            tau2_sq: vec![1.0; m],
            omega: 0.0,
            xi: vec![0.0; m],
            n,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Truncation level L.
    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn e(&self, sign: Channel) -> &[f64] {
        match sign {
            Channel::Plus => &self.e_plus,
            Channel::Minus => &self.e_minus,
        }
    }

    /// Recomputes the cached ξ from `c`.
    pub fn refresh_xi(&mut self, basis: &KLBasis) {
        self.xi = evaluate_basis(basis, &self.c).expect("state and basis lengths agree");
    }

    /// Largest deviation between the cached ξ and the expansion of `c`.
    pub fn xi_error(&self, basis: &KLBasis) -> f64 {
        let fresh = evaluate_basis(basis, &self.c).expect("state and basis lengths agree");
        fresh
            .iter()
            .zip(&self.xi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// The positive (average) or negative (contrast) correlation channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Plus,
    Minus,
}
