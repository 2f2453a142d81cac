//! Quadrature oracle for the piecewise sampler: the density is written
//! directly as a sum of thresholded quadratics and integrated numerically.

use rand::Rng;
use tcgp_core::piecewise::{build, ThresholdTerm};

pub const DRAWS: usize = 100_000;

/// log density straight from the term list.
pub fn direct(terms: &[ThresholdTerm], theta: f64) -> f64 {
    terms.iter().filter(|t| t.is_active(theta)).map(|t| t.value(theta)).sum()
}

pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
        return left + right + (left + right - whole) / 15.0;
    }
    adaptive(f, a, m, left, 0.5 * eps, depth - 1) + adaptive(f, m, b, right, 0.5 * eps, depth - 1)
}

/// Numerical CDF of exp(direct) on a finite window, split at every threshold.
pub struct Quadrature<'t> {
    terms: &'t [ThresholdTerm],
    knots: Vec<f64>,
    peak: f64,
    total: f64,
}

impl<'t> Quadrature<'t> {
    pub fn new(terms: &'t [ThresholdTerm], lo: f64, hi: f64) -> Self {
        let mut knots: Vec<f64> = terms
            .iter()
            .map(|t| t.threshold)
            .filter(|x| x.is_finite() && *x > lo && *x < hi)
            .collect();
        knots.push(lo);
        knots.push(hi);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let peak = (0..=20_000)
            .map(|k| direct(terms, lo + (hi - lo) * k as f64 / 20_000.0))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut q = Self {
            terms,
            knots,
            peak,
            total: 1.0,
        };
        q.total = q.integral(lo, hi);
        q
    }

    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let f = |x: f64| (direct(self.terms, x) - self.peak).exp();
        let mut s = 0.0;
        let mut left = a;
        for &k in self.knots.iter().filter(|&&k| k > a && k < b).chain(std::iter::once(&b)) {
            // evaluate just inside the piece so the active set is the piece's
            let width = k - left;
            if width > 0.0 {
                let inner = |x: f64| f(x.clamp(left + width * 1e-12, k - width * 1e-12));
                let whole = simpson(&inner, left, k);
                s += adaptive(&inner, left, k, whole, 1e-10, 40);
            }
            left = k;
        }
        s / self.total
    }
}

/// KS distance between sorted draws and the quadrature CDF.
pub fn ks_distance(draws: &mut [f64], q: &Quadrature<'_>, lo: f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    let mut cdf = 0.0;
    let mut prev = lo;
    let mut d: f64 = 0.0;
    for (k, &x) in draws.iter().enumerate() {
        let x = x.max(lo);
        cdf += q.integral(prev, x);
        prev = x;
        d = d.max((cdf - k as f64 / n).abs()).max(((k + 1) as f64 / n - cdf).abs());
    }
    d
}

pub enum Case {
    /// Some curvature: truncated normals on every piece.
    Normal,
    /// Linear pieces only: truncated exponentials.
    Exponential,
    /// Constant pieces only.
    Uniform,
}

/// A random term set together with its support and a finite window holding
/// all but a negligible share of the mass.
pub fn random_config(case: Case, seed: u64) -> (Vec<ThresholdTerm>, Option<(f64, f64)>, (f64, f64)) {
    let mut r = super::rng(seed);
    let k = r.random_range(1..8);
    let mut terms = Vec::new();
    match case {
        Case::Normal => {
            let mu: f64 = r.random_range(-3.0..3.0);
            let s: f64 = r.random_range(0.3..3.0);
            let prec = 1.0 / (s * s);
            terms.push(ThresholdTerm::base(-0.5 * prec, mu * prec, 0.0));
            for _ in 0..k {
                let t = mu + s * r.random_range(-3.0..3.0);
                // curvature added by the terms stays below half the base's
                let a1 = prec * r.random_range(-0.5..0.5) / k as f64;
                let a2 = prec * s * r.random_range(-2.0..2.0);
                let a3 = r.random_range(-3.0..3.0);
                let a3 = a3 - a2 * t - a1 * t * t;
                terms.push(if r.random::<bool>() {
                    ThresholdTerm::above(t, a1, a2, a3)
                } else {
                    ThresholdTerm::below(t, a1, a2, a3)
                });
            }
            let w = 40.0 * s + 10.0;
            (terms, None, (mu - w, mu + w))
        }
        Case::Exponential | Case::Uniform => {
            let lo: f64 = r.random_range(-5.0..0.0);
            let hi = lo + r.random_range(0.5..6.0);
            let linear = matches!(case, Case::Exponential);
            for _ in 0..k {
                let t = r.random_range(lo..hi);
                let a2 = if linear { r.random_range(-4.0..4.0) } else { 0.0 };
                let a3 = r.random_range(-2.0..2.0) - a2 * t;
                terms.push(if r.random::<bool>() {
                    ThresholdTerm::above(t, 0.0, a2, a3)
                } else {
                    ThresholdTerm::below(t, 0.0, a2, a3)
                });
            }
            if linear && r.random::<bool>() {
                terms.push(ThresholdTerm::base(0.0, r.random_range(-3.0..3.0), 0.0));
            }
            (terms, Some((lo, hi)), (lo, hi))
        }
    }
}

pub fn check_config(terms: &[ThresholdTerm], support: Option<(f64, f64)>, window: (f64, f64), seed: u64) -> f64 {
    let pd = build(terms, support).unwrap();
    let q = Quadrature::new(terms, window.0, window.1);
    let mut rng = super::rng(seed);
    let mut draws: Vec<f64> = (0..DRAWS).map(|_| pd.sample(&mut rng)).collect();
    if let Some((lo, hi)) = support {
        assert!(draws.iter().all(|&x| x >= lo && x < hi));
    }
    ks_distance(&mut draws, &q, window.0)
}

/// KS distances of the 25 mixed configurations, cycling through the three
/// cases.
pub fn mixed_suite() -> Vec<f64> {
    (0..25u64)
        .map(|c| {
            let case = match c % 3 {
                0 => Case::Normal,
                1 => Case::Exponential,
                _ => Case::Uniform,
            };
            let (terms, support, window) = random_config(case, 1000 + c);
            check_config(&terms, support, window, 2000 + c)
        })
        .collect()
}
