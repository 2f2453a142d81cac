//! Exact sampling from one-dimensional densities of the form
//! exp{Σ_p f_p(θ)·I(θ > L_p) + Σ_k h_k(θ)·I(θ < U_k)} with quadratic f, h.
//!
//! The thresholds cut the line into intervals on which the log density is a
//! single quadratic Dθ² + Eθ + F, so the density is a mixture of truncated
//! normals, truncated exponentials and uniforms.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::special::{
    log1mexp, log_mills, log_norm_interval, norm_cdf, norm_isf, norm_quantile, norm_sf, LN_SQRT_2PI,
};

/// Standardized distance into a tail beyond which truncated normals are drawn
/// by rejection instead of inversion.
const TAIL_SWITCH: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Active for θ > threshold.
    Above,
    /// Active for θ < threshold.
    Below,
}

/// A quadratic a1·θ² + a2·θ + a3 switched on by a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdTerm {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub direction: Direction,
    pub threshold: f64,
}

impl ThresholdTerm {
    pub fn above(threshold: f64, a1: f64, a2: f64, a3: f64) -> Self {
        Self {
            a1,
            a2,
            a3,
            direction: Direction::Above,
            threshold,
        }
    }

    pub fn below(threshold: f64, a1: f64, a2: f64, a3: f64) -> Self {
        Self {
            a1,
            a2,
            a3,
            direction: Direction::Below,
            threshold,
        }
    }

    /// An always-active term.
    pub fn base(a1: f64, a2: f64, a3: f64) -> Self {
        Self::above(f64::NEG_INFINITY, a1, a2, a3)
    }

    pub fn is_active(&self, theta: f64) -> bool {
        match self.direction {
            Direction::Above => theta > self.threshold,
            Direction::Below => theta < self.threshold,
        }
    }

    pub fn value(&self, theta: f64) -> f64 {
        (self.a1 * theta + self.a2) * theta + self.a3
    }
}

/// One interval [lo, hi) with log density Dθ² + Eθ + F.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl Segment {
    #[inline]
    fn q(&self, theta: f64) -> f64 {
        (self.d * theta + self.e) * theta + self.f
    }

    /// log ∫_lo^hi exp(q); NaN when the integral diverges.
    pub fn log_mass(&self) -> f64 {
        segment_log_mass(self.coeffs(), self.lo, self.hi).unwrap_or(f64::NAN)
    }

    fn coeffs(&self) -> Coeffs {
        Coeffs {
            d: self.d,
            e: self.e,
            f: self.f,
        }
    }

    /// Largest and smallest q on a bounded segment.
    fn range(&self) -> (f64, f64) {
        let (qa, qb) = (self.q(self.lo), self.q(self.hi));
        let top = if self.d < 0.0 {
            self.q((-self.e / (2.0 * self.d)).clamp(self.lo, self.hi))
        } else {
            qa.max(qb)
        };
        (top, qa.min(qb))
    }
}

/// Segments whose mass is below e^−NEGLIGIBLE times that of the heaviest one
/// are never proposed; their combined share is far below double precision.
const NEGLIGIBLE: f64 = 60.0;

fn exact_log_mass(seg: &Segment, index: usize) -> Result<f64> {
    segment_log_mass(seg.coeffs(), seg.lo, seg.hi).ok_or(Error::NonIntegrable {
        index,
        lo: seg.lo,
        hi: seg.hi,
    })
}

/// Segments over which q varies by at most this much are sampled by uniform
/// proposals under their peak; all others by exact inversion.
const FLAT: f64 = 1.0;

/// A density exp(q(θ)) with piecewise quadratic q.
///
/// Sampling picks a segment in proportion to an envelope weight, which is the
/// exact mass for curved or unbounded segments and width·exp(max q) for flat
/// ones, then draws exactly within it (flat segments by rejection, restarting
/// the segment choice on failure). The result is an exact draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseDensity {
    segments: Vec<Segment>,
    /// Peak of q on flat segments, NaN on segments sampled exactly.
    peak: Vec<f64>,
    /// Cumulative envelope weights, scaled by exp(−anchor).
    cumulative: Vec<f64>,
}

#[derive(Clone, Copy, Default)]
struct Coeffs {
    d: f64,
    e: f64,
    f: f64,
}

impl Coeffs {
    fn add(self, t: &Coeffs) -> Self {
        Self {
            d: self.d + t.d,
            e: self.e + t.e,
            f: self.f + t.f,
        }
    }
}

/// Assembles the piecewise density on `support` (the whole line when `None`).
pub fn build(terms: &[ThresholdTerm], support: Option<(f64, f64)>) -> Result<PiecewiseDensity> {
    let (lo, hi) = support.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    if !(lo < hi) {
        return Err(Error::EmptySupport);
    }
    let mut above: Vec<(f64, Coeffs)> = Vec::with_capacity(terms.len());
    let mut below: Vec<(f64, Coeffs)> = Vec::with_capacity(terms.len());
    for t in terms {
        if !(t.a1.is_finite() && t.a2.is_finite() && t.a3.is_finite()) || t.threshold.is_nan() {
            return Err(Error::NonFinite("threshold term coefficients".into()));
        }
        let c = Coeffs {
            d: t.a1,
            e: t.a2,
            f: t.a3,
        };
        match t.direction {
            Direction::Above => above.push((t.threshold, c)),
            Direction::Below => below.push((t.threshold, c)),
        }
    }
    above.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    below.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    // breakpoints: merge of both threshold lists, restricted to (lo, hi)
    let mut points: Vec<f64> = Vec::with_capacity(terms.len() + 2);
    points.push(lo);
    let (mut i, mut j) = (0, 0);
    while i < above.len() || j < below.len() {
        let x = if j == below.len() || (i < above.len() && above[i].0 <= below[j].0) {
            i += 1;
            above[i - 1].0
        } else {
            j += 1;
            below[j - 1].0
        };
        if lo < x && x < hi && x != points[points.len() - 1] {
            points.push(x);
        }
    }
    points.push(hi);

    // suffix sums of below-terms: suffix[k] = Σ_{k' ≥ k}
    let mut suffix = alloc::vec![Coeffs::default(); below.len() + 1];
    for k in (0..below.len()).rev() {
        suffix[k] = suffix[k + 1].add(&below[k].1);
    }

    let count = points.len() - 1;
    let mut segments = Vec::with_capacity(count);
    let mut prefix = Coeffs::default();
    let (mut ia, mut ib) = (0, 0);
    for (index, w) in points.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        while ia < above.len() && above[ia].0 <= a {
            prefix = prefix.add(&above[ia].1);
            ia += 1;
        }
        while ib < below.len() && below[ib].0 < b {
            ib += 1;
        }
        let c = prefix.add(&suffix[ib]);
        if c.d > 0.0 {
            return Err(Error::NonIntegrable { index, lo: a, hi: b });
        }
        segments.push(Segment {
            lo: a,
            hi: b,
            d: c.d,
            e: c.e,
            f: c.f,
        });
    }

    // Peaks first. The segment with the highest peak anchors the scale;
    // a bounded segment whose peak plus log width falls more than NEGLIGIBLE
    // below the anchor's exact mass gets zero weight, which mostly needs no
    // logarithm at all.
    let mut peak = alloc::vec![f64::NAN; count];
    let mut flat = alloc::vec![false; count];
    let mut widest: f64 = 0.0;
    let mut best = 0;
    let mut best_top = f64::NEG_INFINITY;
    for (index, seg) in segments.iter().enumerate() {
        let width = seg.hi - seg.lo;
        if width.is_finite() {
            let (top, bottom) = seg.range();
            peak[index] = top;
            flat[index] = top - bottom <= FLAT;
            widest = widest.max(width);
            if top > best_top {
                best_top = top;
                best = index;
            }
        }
    }
    let mut log_w = alloc::vec![f64::NEG_INFINITY; count];
    let floor = if best_top.is_finite() {
        exact_log_mass(&segments[best], best)? - NEGLIGIBLE
    } else {
        f64::NEG_INFINITY
    };
    let skip_below = floor - libm::log(widest.max(f64::MIN_POSITIVE));
    for (index, seg) in segments.iter().enumerate() {
        let width = seg.hi - seg.lo;
        if !width.is_finite() {
            log_w[index] = exact_log_mass(seg, index)?;
            continue;
        }
        let top = peak[index];
        if top < skip_below || top + libm::log(width) < floor {
            continue;
        }
        if flat[index] {
            log_w[index] = top + libm::log(width);
        } else {
            log_w[index] = exact_log_mass(seg, index)?;
            peak[index] = f64::NAN;
        }
    }
    let anchor = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !anchor.is_finite() {
        return Err(Error::NonFinite("total mass of piecewise density".into()));
    }
    let mut cumulative = log_w;
    let mut acc = 0.0;
    for w in cumulative.iter_mut() {
        if *w > f64::NEG_INFINITY {
            acc += libm::exp(*w - anchor);
        }
        *w = acc;
    }
    Ok(PiecewiseDensity {
        segments,
        peak,
        cumulative,
    })
}

/// log ∫_a^b exp(Dθ² + Eθ + F) dθ, or `None` when the integral diverges or
/// the shape is not one the sampler handles.
fn segment_log_mass(c: Coeffs, a: f64, b: f64) -> Option<f64> {
    let width = b - a;
    if c.d < 0.0 {
        Some(gaussian_log_mass(c, a, b))
    } else if c.d > 0.0 {
        None
    } else if c.e == 0.0 {
        width.is_finite().then(|| c.f + libm::log(width))
    } else if c.e < 0.0 {
        a.is_finite()
            .then(|| c.f + c.e * a + log1mexp(c.e * width) - libm::log(-c.e))
    } else {
        b.is_finite()
            .then(|| c.f + c.e * b + log1mexp(-c.e * width) - libm::log(c.e))
    }
}

fn gaussian_log_mass(c: Coeffs, a: f64, b: f64) -> f64 {
    let seg = Segment {
        lo: a,
        hi: b,
        d: c.d,
        e: c.e,
        f: c.f,
    };
    let s = 1.0 / libm::sqrt(-2.0 * c.d);
    let centre = -c.e / (2.0 * c.d);
    let za = (a - centre) / s;
    let zb = (b - centre) / s;
    let width = b - a;
    if width.is_finite() {
        let h = 0.5 * width;
        let mid = a + h;
        let slope = 2.0 * c.d * mid + c.e;
        if h / s < 1e-4 && (slope * h).abs() < 1e-3 {
            return midpoint_log_mass(&seg, mid, h, slope);
        }
    }
    if za >= 0.0 {
        let mut lm = seg.q(a) + libm::log(s) + log_mills(za);
        if b.is_finite() {
            // q(b) − q(a) in factored form
            let dq = width * (c.d * (a + b) + c.e);
            let arg = dq + log_mills(zb) - log_mills(za);
            if arg >= 0.0 {
                return midpoint_log_mass(&seg, a + 0.5 * width, 0.5 * width, c.d * (a + b) + c.e);
            }
            lm += log1mexp(arg);
        }
        lm
    } else if zb <= 0.0 {
        let mut lm = seg.q(b) + libm::log(s) + log_mills(-zb);
        if a.is_finite() {
            let dq = -width * (c.d * (a + b) + c.e);
            let arg = dq + log_mills(-za) - log_mills(-zb);
            if arg >= 0.0 {
                return midpoint_log_mass(&seg, a + 0.5 * width, 0.5 * width, c.d * (a + b) + c.e);
            }
            lm += log1mexp(arg);
        }
        lm
    } else {
        let peak = c.f - c.e * c.e / (4.0 * c.d);
        peak + libm::log(s) + LN_SQRT_2PI + log_norm_interval(za, zb)
    }
}

/// Second-order expansion of the integral over [mid − h, mid + h].
fn midpoint_log_mass(seg: &Segment, mid: f64, h: f64, slope: f64) -> f64 {
    seg.q(mid) + libm::log(2.0 * h) + libm::log1p((2.0 * seg.d + slope * slope) * h * h / 6.0)
}

impl PiecewiseDensity {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Interval boundaries including the support ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.segments.iter().map(|s| s.lo).collect();
        if let Some(last) = self.segments.last() {
            out.push(last.hi);
        }
        out
    }

    /// Log of the total (unnormalized) mass, integrated exactly segment by
    /// segment. O(segments) transcendental evaluations; not used by sampling.
    pub fn log_total(&self) -> f64 {
        let masses: Vec<f64> = self.segments.iter().map(Segment::log_mass).collect();
        crate::special::log_sum_exp(&masses)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.segments[0].lo, self.segments[self.segments.len() - 1].hi)
    }

    fn locate(&self, theta: f64) -> Option<usize> {
        let (lo, hi) = self.support();
        if !(theta >= lo && theta < hi) {
            return None;
        }
        let k = self.segments.partition_point(|s| s.lo <= theta);
        Some(k - 1)
    }

    /// Unnormalized log density; −∞ outside the support.
    pub fn log_density(&self, theta: f64) -> f64 {
        match self.locate(theta) {
            Some(k) => self.segments[k].q(theta),
            None => f64::NEG_INFINITY,
        }
    }

    /// One exact draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let k = self.pick_segment(rng.random::<f64>());
            let seg = &self.segments[k];
            let peak = self.peak[k];
            if !peak.is_nan() {
                let theta = clamp_into(seg.lo + rng.random::<f64>() * (seg.hi - seg.lo), seg.lo, seg.hi);
                if rng.random::<f64>() <= libm::exp(seg.q(theta) - peak) {
                    return theta;
                }
                continue;
            }
            let theta = if seg.d < 0.0 {
                sample_gaussian(seg, rng)
            } else if seg.e != 0.0 {
                sample_exponential(seg, rng.random::<f64>())
            } else {
                seg.lo + rng.random::<f64>() * (seg.hi - seg.lo)
            };
            return clamp_into(theta, seg.lo, seg.hi);
        }
    }

    fn pick_segment(&self, u: f64) -> usize {
        let total = self.cumulative[self.cumulative.len() - 1];
        let target = u * total;
        let k = self.cumulative.partition_point(|&c| c <= target);
        // never land on a zero-weight segment
        let mut k = k.min(self.segments.len() - 1);
        while k > 0 && self.weight(k) == 0.0 {
            k -= 1;
        }
        k
    }

    fn weight(&self, k: usize) -> f64 {
        self.cumulative[k] - if k == 0 { 0.0 } else { self.cumulative[k - 1] }
    }
}

fn clamp_into(theta: f64, lo: f64, hi: f64) -> f64 {
    if theta < lo {
        lo
    } else if theta >= hi {
        if hi.next_down() >= lo {
            hi.next_down()
        } else {
            lo
        }
    } else {
        theta
    }
}

fn sample_gaussian<R: Rng + ?Sized>(seg: &Segment, rng: &mut R) -> f64 {
    let s = 1.0 / libm::sqrt(-2.0 * seg.d);
    let centre = -seg.e / (2.0 * seg.d);
    let za = (seg.lo - centre) / s;
    let zb = (seg.hi - centre) / s;
    if za >= TAIL_SWITCH {
        return tail_rejection(seg, seg.lo, 1.0, rng);
    }
    if zb <= -TAIL_SWITCH {
        return tail_rejection(seg, seg.hi, -1.0, rng);
    }
    let u: f64 = rng.random();
    let z = if za >= 0.0 {
        let pa = norm_sf(za);
        let pb = norm_sf(zb);
        norm_isf(pa - u * (pa - pb))
    } else if zb <= 0.0 {
        let pa = norm_cdf(za);
        let pb = norm_cdf(zb);
        norm_quantile(pa + u * (pb - pa))
    } else {
        let pa = norm_cdf(za);
        let qb = norm_sf(zb);
        let mass = 0.5 * (libm::erf(zb / core::f64::consts::SQRT_2) - libm::erf(za / core::f64::consts::SQRT_2));
        let lower = pa + u * mass;
        if lower <= 0.5 {
            norm_quantile(lower)
        } else {
            norm_isf(qb + (1.0 - u) * mass)
        }
    };
    centre + s * z.clamp(za, zb)
}

/// Rejection sampler for a concave quadratic segment lying far in one tail.
///
/// Starts at the end nearest the mode (`start`) and walks away from it in
/// direction `dir`; proposals are exponential with the log-density slope at
/// `start`, or uniform when the interval is narrow on that scale.
fn tail_rejection<R: Rng + ?Sized>(seg: &Segment, start: f64, dir: f64, rng: &mut R) -> f64 {
    let slope = -dir * (2.0 * seg.d * start + seg.e); // > 0: rate of decay
    let width = seg.hi - seg.lo;
    let q0 = seg.q(start);
    if width * slope < 1.0 {
        loop {
            let x = rng.random::<f64>() * width;
            let theta = start + dir * x;
            if libm::log(rng.random::<f64>()) <= seg.q(theta) - q0 {
                return theta;
            }
        }
    }
    loop {
        let x = -libm::log1p(-rng.random::<f64>()) / slope;
        if x >= width {
            continue;
        }
        // log acceptance = q(start + dir x) − q0 + slope·x = D·x²
        if libm::log(rng.random::<f64>()) <= seg.d * x * x {
            return start + dir * x;
        }
    }
}

fn sample_exponential(seg: &Segment, u: f64) -> f64 {
    let e = seg.e;
    let width = seg.hi - seg.lo;
    if e < 0.0 {
        seg.lo + libm::log1p(u * libm::expm1(e * width)) / e
    } else {
        seg.hi + libm::log1p(u * libm::expm1(-e * width)) / e
    }
}
