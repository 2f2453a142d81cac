//! Synthetic two-modality datasets with known correlation regions.
//!
//! Signals are Gaussian-process draws under the separable kernel
//! κ(v, v′) = exp{−0.1(‖v‖² + ‖v′‖²) − 10‖v − v′‖²}, so each draw is a
//! product of per-axis square-root factors applied to white noise.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use faer::Mat;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::ImageDataset;
use crate::error::{Error, Result};
use crate::grid::GridDomain;
use crate::linalg::sym_eigen_desc;
use crate::rng::{Purpose, Streams};

/// A region of the unit cube.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum Shape {
    /// ‖v − center‖₁ < radius
    L1Ball { center: Vec<f64>, radius: f64 },
    /// ‖v − center‖₂ < radius
    Ball { center: Vec<f64>, radius: f64 },
    /// lo ≤ v ≤ hi componentwise
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Shape {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Shape::L1Ball { center, radius } => {
                x.iter().zip(center).map(|(a, b)| (a - b).abs()).sum::<f64>() < *radius
            }
            Shape::Ball { center, radius } => {
                x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < radius * radius
            }
            Shape::Box { lo, hi } => x.iter().zip(lo).zip(hi).all(|((v, a), b)| *a <= *v && *v <= *b),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Shape::L1Ball { center, .. } | Shape::Ball { center, .. } => center.len(),
            Shape::Box { lo, hi } => lo.len().min(hi.len()),
        }
    }
}

/// A region with the sign of the correlation it carries.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct Region {
    /// +1 or −1.
    pub sign: i8,
    pub shape: Shape,
}

/// The 2D design: 64×64 by default, positive L1 balls at (0.3, 0.7),
/// (0.7, 0.7), (0.3, 0.3) and negative ones at (0.5, 0.5), (0.7, 0.3), all of
/// radius 0.1.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct SimSpec2D {
    pub n: usize,
    pub side: usize,
    pub zeta_plus: f64,
    pub zeta_minus: f64,
    pub seed: u64,
}

impl Default for SimSpec2D {
    fn default() -> Self {
        Self {
            n: 50,
            side: 64,
            zeta_plus: 0.75,
            zeta_minus: 0.85,
            seed: 0,
        }
    }
}

impl SimSpec2D {
    pub const WEAK: (f64, f64) = (0.15, 0.25);
    pub const STRONG: (f64, f64) = (0.75, 0.85);

    pub fn regions() -> Vec<Region> {
        let ball = |sign: i8, c: [f64; 2]| Region {
            sign,
            shape: Shape::L1Ball {
                center: c.to_vec(),
                radius: 0.1,
            },
        };
        vec![
            ball(1, [0.3, 0.7]),
            ball(1, [0.7, 0.7]),
            ball(1, [0.3, 0.3]),
            ball(-1, [0.5, 0.5]),
            ball(-1, [0.7, 0.3]),
        ]
    }
}

/// Generating parameters and the resulting true correlation map.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTruth {
    pub sign: Vec<i8>,
    pub rho: Vec<f64>,
    pub sigma_plus_sq: Vec<f64>,
    pub sigma_minus_sq: Vec<f64>,
    pub tau1_sq: Vec<f64>,
    pub tau2_sq: Vec<f64>,
}

/// A generated dataset.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub grid: GridDomain,
    pub data: ImageDataset,
    pub truth: SimTruth,
}

/// Generating kernel on one axis: exp{−0.1(x² + x′²) − 10(x − x′)²}.
pub fn generating_kernel_1d(x: f64, y: f64) -> f64 {
    libm::exp(-0.1 * (x * x + y * y) - 10.0 * (x - y) * (x - y))
}

/// Generating kernel between two points of the unit cube.
pub fn generating_kernel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| generating_kernel_1d(x, y)).product()
}

pub fn generate_2d(spec: &SimSpec2D) -> Result<Simulated> {
    if spec.side < 2 {
        return Err(Error::InvalidParam("the 2D grid needs at least 2 points per side".into()));
    }
    generate(
        &[spec.side, spec.side],
        spec.n,
        &SimSpec2D::regions(),
        (spec.zeta_plus, spec.zeta_minus),
        spec.seed,
    )
}

/// Generates on a 3D lattice with user-supplied regions.
pub fn generate_3d(dims: &[usize], n: usize, regions: &[Region], zetas: (f64, f64), seed: u64) -> Result<Simulated> {
    if dims.len() != 3 {
        return Err(Error::InvalidParam(format!("expected 3 dimensions, got {}", dims.len())));
    }
    generate(dims, n, regions, zetas, seed)
}

/// Generates a dataset on the full lattice `dims` (2D or 3D).
pub fn generate(dims: &[usize], n: usize, regions: &[Region], zetas: (f64, f64), seed: u64) -> Result<Simulated> {
    let (zp, zm) = zetas;
    if !(zp >= 0.0 && zm >= 0.0 && zp.is_finite() && zm.is_finite()) {
        return Err(Error::InvalidParam("signal strengths must be nonnegative".into()));
    }
    if n < 2 {
        return Err(Error::InvalidParam("at least 2 subjects are required".into()));
    }
    let grid = GridDomain::full(dims)?;
    for r in regions {
        if r.sign != 1 && r.sign != -1 {
            return Err(Error::InvalidParam(format!("region sign must be +1 or -1, got {}", r.sign)));
        }
        if r.shape.dim() != dims.len() {
            return Err(Error::InvalidParam("region dimension does not match the grid".into()));
        }
    }
    let m = grid.m();
    let mut sigma_plus_sq = vec![0.0; m];
    let mut sigma_minus_sq = vec![0.0; m];
    for v in 0..m {
        let x = grid.coord(v);
        let pos = regions.iter().filter(|r| r.sign > 0 && r.shape.contains(x)).count();
        let neg = regions.iter().filter(|r| r.sign < 0 && r.shape.contains(x)).count();
        if pos > 0 && neg > 0 {
            return Err(Error::RegionOverlap(grid.lattice_index(v)));
        }
        sigma_plus_sq[v] = zp * pos as f64;
        sigma_minus_sq[v] = zm * neg as f64;
    }

    let factors = axis_factors(&grid)?;
    let streams = Streams::new(seed);
    let field = |iteration: u64, task: u64| {
        let mut rng = streams.stream(Purpose::Simulate, iteration, task);
        gp_draw(&factors, dims, &mut rng)
    };
    let tau1_sq: Vec<f64> = field(0, 0).iter().map(|g| libm::exp(*g)).collect();
    let tau2_sq: Vec<f64> = field(0, 1).iter().map(|g| libm::exp(*g)).collect();
    let sp: Vec<f64> = sigma_plus_sq.iter().map(|s| libm::sqrt(*s)).collect();
    let sm: Vec<f64> = sigma_minus_sq.iter().map(|s| libm::sqrt(*s)).collect();

    let subjects = crate::par::map_indexed(n, |i| {
        let it = 1 + i as u64;
        let eta_plus = field(it, 0);
        let eta_minus = field(it, 1);
        let mut rng = streams.stream(Purpose::Simulate, it, 2);
        let mut y1 = Vec::with_capacity(m);
        let mut y2 = Vec::with_capacity(m);
        for v in 0..m {
            let p = sp[v] * eta_plus[v];
            let q = sm[v] * eta_minus[v];
            let e1: f64 = rng.sample(StandardNormal);
            let e2: f64 = rng.sample(StandardNormal);
            y1.push(p + q + libm::sqrt(tau1_sq[v]) * e1);
            y2.push(p - q + libm::sqrt(tau2_sq[v]) * e2);
        }
        (y1, y2)
    });
    let mut y1 = Vec::with_capacity(n * m);
    let mut y2 = Vec::with_capacity(n * m);
    for (a, b) in subjects {
        y1.extend(a);
        y2.extend(b);
    }

    let mut rho = vec![0.0; m];
    let mut sign = vec![0i8; m];
    for v in 0..m {
        let x = grid.coord(v);
        let k = generating_kernel(x, x);
        let a = sigma_plus_sq[v] * k;
        let b = sigma_minus_sq[v] * k;
        rho[v] = (a - b) / libm::sqrt((a + b + tau1_sq[v]) * (a + b + tau2_sq[v]));
        sign[v] = if sigma_plus_sq[v] > 0.0 {
            1
        } else if sigma_minus_sq[v] > 0.0 {
            -1
        } else {
            0
        };
    }
    let data = ImageDataset::new(n, m, y1, y2)?;
    Ok(Simulated {
        grid,
        data,
        truth: SimTruth {
            sign,
            rho,
            sigma_plus_sq,
            sigma_minus_sq,
            tau1_sq,
            tau2_sq,
        },
    })
}

/// Per-axis square-root factors B_a (row-major) with B_a·B_aᵀ equal to the
/// axis kernel matrix.
fn axis_factors(grid: &GridDomain) -> Result<Vec<Vec<f64>>> {
    grid.dims()
        .iter()
        .map(|&size| {
            let x: Vec<f64> = (0..size)
                .map(|i| if size > 1 { i as f64 / (size - 1) as f64 } else { 0.0 })
                .collect();
            let k = Mat::<f64>::from_fn(size, size, |i, j| generating_kernel_1d(x[i], x[j]));
            let (vals, vecs) = sym_eigen_desc(&k, size)?;
            let mut b = vec![0.0; size * size];
            for (col, &lam) in vals.iter().enumerate() {
                let s = libm::sqrt(lam.max(0.0));
                for row in 0..size {
                    b[row * size + col] = vecs[col * size + row] * s;
                }
            }
            Ok(b)
        })
        .collect()
}

/// One draw of GP(0, κ) on the full lattice.
fn gp_draw<R: Rng + ?Sized>(factors: &[Vec<f64>], dims: &[usize], rng: &mut R) -> Vec<f64> {
    let len: usize = dims.iter().product();
    let mut t: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
    let mut out = vec![0.0; len];
    for (a, b) in factors.iter().enumerate() {
        let na = dims[a];
        let outer: usize = dims[..a].iter().product();
        let inner: usize = dims[a + 1..].iter().product();
        out.iter_mut().for_each(|x| *x = 0.0);
        for o in 0..outer {
            for j in 0..na {
                let dst = (o * na + j) * inner;
                for k in 0..na {
                    let w = b[j * na + k];
                    if w == 0.0 {
                        continue;
                    }
                    let src = (o * na + k) * inner;
                    for s in 0..inner {
                        out[dst + s] += w * t[src + s];
                    }
                }
            }
        }
        core::mem::swap(&mut t, &mut out);
    }
    t
}
