//! Special functions: the normal distribution in log space, its quantile, and
//! the modified Bessel function of the second kind.

use core::f64::consts::{PI, SQRT_2};

/// ln(sqrt(2π))
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    libm::exp(-0.5 * z * z - LN_SQRT_2PI)
}

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Standard normal survival function, 1 − Φ(z), accurate in the right tail.
pub fn norm_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

/// Log of the Mills ratio R(z) = Φ̄(z)/φ(z) for z ≥ 0.
///
/// erfc is relatively accurate until Φ̄ nears underflow; past MILLS_SWITCH a
/// short continued fraction has already converged.
pub fn log_mills(z: f64) -> f64 {
    debug_assert!(z >= 0.0 || z.is_nan());
    if z == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if z < MILLS_SWITCH {
        return libm::log(norm_sf(z)) + 0.5 * z * z + LN_SQRT_2PI;
    }
    -libm::log(mills_fraction(z, 24))
}

const MILLS_SWITCH: f64 = 20.0;

/// Denominator of R(z) = 1/(z + 1/(z + 2/(z + 3/(z + ...)))), truncated after
/// `terms` levels.
fn mills_fraction(z: f64, terms: u32) -> f64 {
    let mut t = z;
    for k in (1..=terms).rev() {
        t = z + k as f64 / t;
    }
    t
}

/// ln Φ(z), finite for every finite z.
pub fn log_norm_cdf(z: f64) -> f64 {
    if z < 0.0 {
        log_norm_sf(-z)
    } else {
        libm::log1p(-norm_sf(z))
    }
}

/// ln Φ̄(z), finite for every finite z.
pub fn log_norm_sf(z: f64) -> f64 {
    if z >= 0.0 {
        log_mills(z) - 0.5 * z * z - LN_SQRT_2PI
    } else {
        libm::log1p(-norm_cdf(z))
    }
}

/// ln(1 − e^x) for x ≤ 0.
pub fn log1mexp(x: f64) -> f64 {
    if x > -core::f64::consts::LN_2 {
        libm::log(-libm::expm1(x))
    } else {
        libm::log1p(-libm::exp(x))
    }
}

/// ln(Φ(b) − Φ(a)) for a < b, without cancellation in either tail.
pub fn log_norm_interval(a: f64, b: f64) -> f64 {
    if a >= b {
        return f64::NEG_INFINITY;
    }
    if a >= 0.0 {
        let la = log_norm_sf(a);
        la + log1mexp(log_norm_sf(b) - la)
    } else if b <= 0.0 {
        let lb = log_norm_cdf(b);
        lb + log1mexp(log_norm_cdf(a) - lb)
    } else {
        libm::log(0.5 * (libm::erf(b / SQRT_2) - libm::erf(a / SQRT_2)))
    }
}

/// log Σ exp(x_i); −∞ for an empty or all −∞ input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    let s: f64 = xs.iter().map(|&x| libm::exp(x - max)).sum();
    max + libm::log(s)
}

/// Standard normal quantile Φ⁻¹(p).
///
/// Rational starting point (Acklam) polished with two Halley steps against
/// the erfc-based CDF, which gives full double precision down to p ≈ 1e-300.
pub fn norm_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        return -norm_quantile_lower(1.0 - p);
    }
    norm_quantile_lower(p)
}

/// Inverse survival function: x with Φ̄(x) = q, accurate for small q.
pub fn norm_isf(q: f64) -> f64 {
    -norm_quantile(q)
}

fn norm_quantile_lower(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239e0,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838e0,
        -2.549732539343734e0,
        4.374664141464968e0,
        2.938163982698783e0,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996e0,
        3.754408661907416e0,
    ];
    let mut x = if p < 0.02425 {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    for _ in 0..2 {
        let e = norm_cdf(x) - p;
        let u = e / norm_pdf(x);
        if !u.is_finite() {
            break;
        }
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// Coefficients of 1/Γ(z) = Σ c_k z^k, k = 1..26.
const RECIP_GAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

/// Returns (gam1, gam2) with gam1 = (1/Γ(1−μ) − 1/Γ(1+μ))/(2μ) and
/// gam2 = (1/Γ(1−μ) + 1/Γ(1+μ))/2, for |μ| ≤ 1/2.
fn temme_gammas(mu: f64) -> (f64, f64) {
    // 1/Γ(1+μ) = (1/Γ(μ))/μ = Σ c_k μ^{k−1}; split into even and odd powers.
    let mu2 = mu * mu;
    let mut even = 0.0; // c1 + c3 μ² + c5 μ⁴ + ...
    let mut odd = 0.0; // c2 + c4 μ² + ...
    for k in (0..13).rev() {
        even = even * mu2 + RECIP_GAMMA[2 * k];
        odd = odd * mu2 + RECIP_GAMMA[2 * k + 1];
    }
    // 1/Γ(1+μ) = even + μ·odd, 1/Γ(1−μ) = even − μ·odd
    (-odd, even)
}

/// Modified Bessel function of the second kind K_ν(x) for ν ≥ 0, x > 0,
/// together with ln K_ν(x) (which stays finite when K_ν underflows).
pub fn bessel_k_ln(nu: f64, x: f64) -> f64 {
    debug_assert!(x > 0.0 && nu >= 0.0);
    let n = libm::floor(nu + 0.5);
    let mu = nu - n;
    // (K_μ, K_{μ+1}) up to a common factor exp(−shift)
    let (mut k0, mut k1, shift) = if x <= 2.0 {
        let (a, b) = temme_series(mu, x);
        (a, b, 0.0)
    } else {
        let (a, b) = steed_scaled(mu, x);
        (a, b, x)
    };
    let mut order = mu;
    let mut log_scale = 0.0;
    for _ in 0..(n as usize) {
        let k2 = 2.0 * (order + 1.0) / x * k1 + k0;
        k0 = k1;
        k1 = k2;
        order += 1.0;
        if k1 > 1e250 {
            k0 *= 1e-250;
            k1 *= 1e-250;
            log_scale += 250.0 * core::f64::consts::LN_10;
        }
    }
    libm::log(k0) + log_scale - shift
}

/// K_ν(x) for ν ≥ 0, x > 0.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    libm::exp(bessel_k_ln(nu, x))
}

fn temme_series(mu: f64, x: f64) -> (f64, f64) {
    let d = -libm::log(0.5 * x);
    let e = mu * d;
    let fact = if mu.abs() < 1e-12 { 1.0 } else { mu * PI / libm::sin(mu * PI) };
    let fact2 = if e.abs() < 1e-12 { 1.0 } else { libm::sinh(e) / e };
    let (gam1, gam2) = temme_gammas(mu);
    let gampl = gam2 - mu * gam1;
    let gammi = gam2 + mu * gam1;
    let mut ff = fact * (gam1 * libm::cosh(e) + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = libm::exp(e);
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dd = 0.25 * x * x;
    let mut sum1 = p;
    let mut i = 1.0;
    loop {
        ff = (i * ff + p + q) / (i * i - mu * mu);
        c *= dd / i;
        p /= i - mu;
        q /= i + mu;
        let del = c * ff;
        sum += del;
        let del1 = c * p - i * del;
        sum1 += del1;
        if del.abs() < sum.abs() * 1e-17 || i > 500.0 {
            break;
        }
        i += 1.0;
    }
    (sum, sum1 * 2.0 / x)
}

/// exp(x)·(K_μ(x), K_{μ+1}(x)) by Steed's continued fraction, x > 2.
fn steed_scaled(mu: f64, x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu * mu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    let mut i = 2.0;
    loop {
        a -= 2.0 * (i - 1.0);
        c = -a * c / i;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 || i > 10_000.0 {
            break;
        }
        i += 1.0;
    }
    let h = a1 * h;
    let kmu = libm::sqrt(PI / (2.0 * x)) / s;
    let kmu1 = kmu * (mu + x + 0.5 - h) / x;
    (kmu, kmu1)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}
