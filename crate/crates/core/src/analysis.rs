//! Posterior summaries, selection metrics, clusters and the voxel-wise
//! baseline.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::ImageDataset;
use crate::error::{Error, Result};
use crate::gibbs::PosteriorSamples;
use crate::grid::GridDomain;
use crate::special::norm_sf;

/// Per-voxel posterior summary.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub pip_plus: Vec<f64>,
    pub pip_minus: Vec<f64>,
    pub mean_rho: Vec<f64>,
    pub sd_rho: Vec<f64>,
    pub sign_map: Vec<i8>,
}

impl PosteriorSummary {
    pub fn m(&self) -> usize {
        self.sign_map.len()
    }
}

pub fn summarize(samples: &PosteriorSamples, pip_threshold: f64) -> Result<PosteriorSummary> {
    if samples.kept == 0 {
        return Err(Error::InvalidParam("no kept samples to summarize".into()));
    }
    let m = samples.m;
    let k = samples.kept as f64;
    let pip_plus: Vec<f64> = samples.pip_plus_count.iter().map(|&c| c as f64 / k).collect();
    let pip_minus: Vec<f64> = samples.pip_minus_count.iter().map(|&c| c as f64 / k).collect();
    let mut mean_rho = vec![0.0; m];
    for s in 0..samples.kept {
        for (acc, &r) in mean_rho.iter_mut().zip(samples.rho_map(s)) {
            *acc += r;
        }
    }
    mean_rho.iter_mut().for_each(|x| *x /= k);
    let mut sd_rho = vec![0.0; m];
    if samples.kept > 1 {
        for s in 0..samples.kept {
            for ((acc, &r), &mu) in sd_rho.iter_mut().zip(samples.rho_map(s)).zip(&mean_rho) {
                *acc += (r - mu) * (r - mu);
            }
        }
        sd_rho.iter_mut().for_each(|x| *x = libm::sqrt(*x / (k - 1.0)));
    }
    let sign_map = select(&pip_plus, &pip_minus, pip_threshold);
    Ok(PosteriorSummary {
        pip_plus,
        pip_minus,
        mean_rho,
        sd_rho,
        sign_map,
    })
}

/// +1 where pip_plus exceeds the threshold, −1 where pip_minus does (the
/// larger wins if both do), 0 elsewhere.
pub fn select(pip_plus: &[f64], pip_minus: &[f64], threshold: f64) -> Vec<i8> {
    pip_plus
        .iter()
        .zip(pip_minus)
        .map(|(&p, &q)| {
            if p > threshold && p >= q {
                1
            } else if q > threshold {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Confusion counts and rates for one sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    /// NaN when the truth has no voxel of this sign.
    pub sensitivity: f64,
    pub specificity: f64,
    /// FP / max(TP + FP, 1)
    pub fdr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignMetrics {
    pub positive: Metrics,
    pub negative: Metrics,
}

pub fn metrics(est: &[i8], truth: &[i8]) -> Result<SignMetrics> {
    if est.len() != truth.len() {
        return Err(Error::Shape(format!(
            "estimate has {} voxels, truth has {}",
            est.len(),
            truth.len()
        )));
    }
    Ok(SignMetrics {
        positive: metrics_for(est, truth, 1),
        negative: metrics_for(est, truth, -1),
    })
}

fn metrics_for(est: &[i8], truth: &[i8], sign: i8) -> Metrics {
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&e, &t) in est.iter().zip(truth) {
        match (e == sign, t == sign) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { f64::NAN } else { a as f64 / b as f64 };
    Metrics {
        tp,
        fp,
        fn_,
        tn,
        sensitivity: ratio(tp, tp + fn_),
        specificity: ratio(tn, tn + fp),
        fdr: fp as f64 / (tp + fp).max(1) as f64,
    }
}

/// A connected set of same-signed selected voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub sign: i8,
    pub size: usize,
    /// Unweighted mean of member coordinates.
    pub center: Vec<f64>,
    pub mean_rho: f64,
    pub sd_rho: f64,
    /// Mean PIP of the cluster's sign.
    pub mean_pip: f64,
    pub voxels: Vec<usize>,
}

/// Labels face-connected components of equal nonzero sign. Returns one label
/// per voxel (usize::MAX for unselected voxels) and the component count.
pub fn label_components(sign_map: &[i8], grid: &GridDomain) -> (Vec<usize>, usize) {
    let m = grid.m();
    let mut label = vec![usize::MAX; m];
    let mut count = 0;
    let mut stack = Vec::new();
    for seed in 0..m {
        if sign_map[seed] == 0 || label[seed] != usize::MAX {
            continue;
        }
        label[seed] = count;
        stack.push(seed);
        while let Some(v) = stack.pop() {
            for u in grid.face_neighbors(v) {
                if label[u] == usize::MAX && sign_map[u] == sign_map[seed] {
                    label[u] = count;
                    stack.push(u);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

/// Clusters of the summary's sign map with at least `min_size` voxels,
/// largest first.
pub fn clusters(summary: &PosteriorSummary, grid: &GridDomain, min_size: usize) -> Result<Vec<Cluster>> {
    if summary.m() != grid.m() {
        return Err(Error::Shape(format!(
            "summary has {} voxels, grid has {}",
            summary.m(),
            grid.m()
        )));
    }
    let (label, count) = label_components(&summary.sign_map, grid);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (v, &l) in label.iter().enumerate() {
        if l != usize::MAX {
            members[l].push(v);
        }
    }
    let d = grid.ndim();
    let mut out: Vec<Cluster> = members
        .into_iter()
        .filter(|vs| vs.len() >= min_size.max(1))
        .map(|voxels| {
            let size = voxels.len();
            let k = size as f64;
            let sign = summary.sign_map[voxels[0]];
            let mut center = vec![0.0; d];
            for &v in &voxels {
                for (c, x) in center.iter_mut().zip(grid.coord(v)) {
                    *c += x;
                }
            }
            center.iter_mut().for_each(|c| *c /= k);
            let mean_rho = voxels.iter().map(|&v| summary.mean_rho[v]).sum::<f64>() / k;
            let sd_rho = if size > 1 {
                libm::sqrt(
                    voxels
                        .iter()
                        .map(|&v| (summary.mean_rho[v] - mean_rho) * (summary.mean_rho[v] - mean_rho))
                        .sum::<f64>()
                        / (k - 1.0),
                )
            } else {
                0.0
            };
            let pip = if sign > 0 { &summary.pip_plus } else { &summary.pip_minus };
            let mean_pip = voxels.iter().map(|&v| pip[v]).sum::<f64>() / k;
            Cluster {
                sign,
                size,
                center,
                mean_rho,
                sd_rho,
                mean_pip,
                voxels,
            }
        })
        .collect();
    out.sort_by(|a, b| b.size.cmp(&a.size).then(a.voxels[0].cmp(&b.voxels[0])));
    Ok(out)
}

/// Pearson correlation of the two modalities at every voxel.
pub fn voxel_correlations(ds: &ImageDataset) -> Vec<f64> {
    let (n, m) = (ds.n(), ds.m());
    (0..m)
        .map(|v| {
            let (mut s1, mut s2) = (0.0, 0.0);
            for i in 0..n {
                s1 += ds.y1()[i * m + v];
                s2 += ds.y2()[i * m + v];
            }
            let (m1, m2) = (s1 / n as f64, s2 / n as f64);
            let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
            for i in 0..n {
                let a = ds.y1()[i * m + v] - m1;
                let b = ds.y2()[i * m + v] - m2;
                sxy += a * b;
                sxx += a * a;
                syy += b * b;
            }
            let den = libm::sqrt(sxx * syy);
            if den > 0.0 {
                (sxy / den).clamp(-1.0, 1.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// Two-sided p-value of a sample correlation under the Fisher z
/// approximation: z = atanh(r)·√(n − 3).
pub fn fisher_p_value(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let z = libm::atanh(r).abs() * libm::sqrt(n as f64 - 3.0);
    (2.0 * norm_sf(z)).min(1.0)
}

/// Benjamini-Hochberg step-up: which hypotheses are rejected at level alpha.
pub fn benjamini_hochberg(p: &[f64], alpha: f64) -> Vec<bool> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut cutoff = 0;
    for (rank, &i) in order.iter().enumerate() {
        if p[i] <= alpha * (rank + 1) as f64 / m as f64 {
            cutoff = rank + 1;
        }
    }
    let mut reject = vec![false; m];
    for &i in &order[..cutoff] {
        reject[i] = true;
    }
    reject
}

/// Voxel-wise correlation tests with BH control; rejected voxels carry the
/// sign of their sample correlation.
pub fn voxelwise_baseline(ds: &ImageDataset, alpha: f64) -> Result<Vec<i8>> {
    if ds.n() < 4 {
        return Err(Error::InvalidParam("the voxel-wise baseline needs at least 4 subjects".into()));
    }
    let r = voxel_correlations(ds);
    let p: Vec<f64> = r.iter().map(|&x| fisher_p_value(x, ds.n())).collect();
    let reject = benjamini_hochberg(&p, alpha);
    Ok(r.iter()
        .zip(reject)
        .map(|(&x, rej)| if !rej { 0 } else if x > 0.0 { 1 } else { -1 })
        .collect())
}
