//! Cluster tables, metric tables and PGM slice maps.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tcgp_core::analysis::{Cluster, Metrics, PosteriorSummary, SignMetrics};
use tcgp_core::GridDomain;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterRow {
    pub sign: i8,
    pub size: usize,
    pub center: Vec<f64>,
    pub mean_rho: f64,
    pub sd_rho: f64,
    pub mean_pip: f64,
}

impl From<&Cluster> for ClusterRow {
    fn from(c: &Cluster) -> Self {
        Self {
            sign: c.sign,
            size: c.size,
            center: c.center.clone(),
            mean_rho: c.mean_rho,
            sd_rho: c.sd_rho,
            mean_pip: c.mean_pip,
        }
    }
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

/// One row per cluster; coordinate columns are `center_0 .. center_{d-1}`.
pub fn write_cluster_csv(path: &Path, rows: &[ClusterRow], ndim: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec!["sign".to_string(), "size".to_string()];
    header.extend((0..ndim).map(|a| format!("center_{a}")));
    header.extend(["mean_rho", "sd_rho", "mean_pip"].map(String::from));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        let mut rec = vec![r.sign.to_string(), r.size.to_string()];
        rec.extend(r.center.iter().map(|x| format!("{x:.6}")));
        rec.extend([r.mean_rho, r.sd_rho, r.mean_pip].map(|x| format!("{x:.6}")));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub sign: &'static str,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    /// `None` when the truth has no voxel of this sign.
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub fdr: f64,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn metrics_rows(m: &SignMetrics) -> Vec<MetricsRow> {
    let row = |sign, m: &Metrics| MetricsRow {
        sign,
        tp: m.tp,
        fp: m.fp,
        fn_: m.fn_,
        tn: m.tn,
        sensitivity: finite(m.sensitivity),
        specificity: finite(m.specificity),
        fdr: m.fdr,
    };
    vec![row("positive", &m.positive), row("negative", &m.negative)]
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["sign", "tp", "fp", "fn", "tn", "sensitivity", "specificity", "fdr"])
        .map_err(|e| csv_err(path, e))?;
    let opt = |x: Option<f64>| x.map_or_else(|| "NaN".to_string(), |v| format!("{v:.6}"));
    for r in rows {
        w.write_record([
            r.sign.to_string(),
            r.tp.to_string(),
            r.fp.to_string(),
            r.fn_.to_string(),
            r.tn.to_string(),
            opt(r.sensitivity),
            opt(r.specificity),
            format!("{:.6}", r.fdr),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// 8-bit binary greymap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Pgm {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn parse(bytes: &[u8]) -> Option<Self> {
        // header: magic, width, height, maxval, each followed by whitespace
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return None;
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?);
        }
        pos += 1;
        if fields[0] != "P5" || fields[3] != "255" {
            return None;
        }
        let width: usize = fields[1].parse().ok()?;
        let height: usize = fields[2].parse().ok()?;
        let pixels = bytes.get(pos..)?.to_vec();
        (pixels.len() == width * height).then_some(Self { width, height, pixels })
    }
}

/// Positive and negative maps of the selected mean correlations, one image
/// pair per slice along the last axis (a 2D grid is a single slice). Both
/// signs share the scale 255 / max|mean ρ| over selected voxels; unselected
/// and masked-out pixels are black.
pub fn slice_maps(summary: &PosteriorSummary, grid: &GridDomain) -> Vec<(Pgm, Pgm)> {
    let dims = grid.dims();
    let (h, w) = (dims[0], dims[1]);
    let depth = if dims.len() == 3 { dims[2] } else { 1 };
    let peak = (0..grid.m())
        .filter(|&v| summary.sign_map[v] != 0)
        .map(|v| summary.mean_rho[v].abs())
        .fold(0.0f64, f64::max);
    let level = |x: f64| {
        if peak > 0.0 {
            (255.0 * (x / peak).clamp(0.0, 1.0)).round() as u8
        } else {
            0
        }
    };
    (0..depth)
        .map(|k| {
            let mut pos = vec![0u8; h * w];
            let mut neg = vec![0u8; h * w];
            for r in 0..h {
                for c in 0..w {
                    let lattice = (r * w + c) * depth + k;
                    if let Some(v) = grid.voxel_at(lattice) {
                        let rho = summary.mean_rho[v];
                        match summary.sign_map[v] {
                            1 => pos[r * w + c] = level(rho),
                            -1 => neg[r * w + c] = level(-rho),
                            _ => {}
                        }
                    }
                }
            }
            let img = |pixels| Pgm {
                width: w,
                height: h,
                pixels,
            };
            (img(pos), img(neg))
        })
        .collect()
}

/// Writes `positive_slice_KKK.pgm` and `negative_slice_KKK.pgm` into `dir`.
pub fn write_slice_maps(dir: &Path, summary: &PosteriorSummary, grid: &GridDomain) -> Result<Vec<PathBuf>> {
    crate::io::create_dir(dir)?;
    let mut paths = Vec::new();
    for (k, (pos, neg)) in slice_maps(summary, grid).into_iter().enumerate() {
        for (name, img) in [("positive", pos), ("negative", neg)] {
            let path = dir.join(format!("{name}_slice_{k:03}.pgm"));
            fs::write(&path, img.to_bytes()).map_err(|e| CliError::io(&path, e))?;
            paths.push(path);
        }
    }
    Ok(paths)
}
