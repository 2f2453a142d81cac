use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Two modality stacks over (subject, voxel), stored subject-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageDataset {
    n: usize,
    m: usize,
    y1: Vec<f64>,
    y2: Vec<f64>,
    normalized: bool,
}

impl ImageDataset {
    pub fn new(n: usize, m: usize, y1: Vec<f64>, y2: Vec<f64>) -> Result<Self> {
        check_shape(n, m, &y1, "y1")?;
        check_shape(n, m, &y2, "y2")?;
        Ok(Self {
            n,
            m,
            y1,
            y2,
            normalized: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn y1(&self) -> &[f64] {
        &self.y1
    }

    pub fn y2(&self) -> &[f64] {
        &self.y2
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.y1, self.y2)
    }
}

fn check_shape(n: usize, m: usize, y: &[f64], name: &str) -> Result<()> {
    if y.len() != n * m {
        return Err(Error::Shape(format!(
            "{name} has {} values, expected {n} x {m}",
            y.len()
        )));
    }
    if let Some(k) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "{name} at subject {} voxel {}",
            k / m.max(1),
            k % m.max(1)
        )));
    }
    Ok(())
}

/// Z-scores every voxel column of both modalities across subjects.
pub fn normalize_dataset(ds: &ImageDataset) -> Result<ImageDataset> {
    if ds.n < 2 {
        return Err(Error::InvalidParam(format!(
            "normalization needs at least 2 subjects, got {}",
            ds.n
        )));
    }
    let y1 = zscore_columns(ds.n, ds.m, &ds.y1, 1)?;
    let y2 = zscore_columns(ds.n, ds.m, &ds.y2, 2)?;
    Ok(ImageDataset {
        n: ds.n,
        m: ds.m,
        y1,
        y2,
        normalized: true,
    })
}

fn zscore_columns(n: usize, m: usize, y: &[f64], modality: u8) -> Result<Vec<f64>> {
    let mut mean = alloc::vec![0.0; m];
    for row in y.chunks_exact(m) {
        for (s, &v) in mean.iter_mut().zip(row) {
            *s += v;
        }
    }
    for s in &mut mean {
        *s /= n as f64;
    }
    let mut ss = alloc::vec![0.0; m];
    let mut scale = alloc::vec![0.0f64; m];
    for row in y.chunks_exact(m) {
        for v in 0..m {
            let d = row[v] - mean[v];
            ss[v] += d * d;
            scale[v] = scale[v].max(row[v].abs());
        }
    }
    let mut sd = ss;
    for v in 0..m {
        let s = libm::sqrt(sd[v] / (n - 1) as f64);
        if !(s > 1e-12 * scale[v].max(1.0)) {
            return Err(Error::ZeroVariance { voxel: v, modality });
        }
        sd[v] = s;
    }
    let mut out = Vec::with_capacity(y.len());
    for row in y.chunks_exact(m) {
        out.extend(row.iter().zip(&mean).zip(&sd).map(|((&x, mu), s)| (x - mu) / s));
    }
    Ok(out)
}

/// Average and half-contrast of the two modalities, subject-major n × m.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedDataset {
    n: usize,
    m: usize,
    y_plus: Vec<f64>,
    y_minus: Vec<f64>,
}

impl TransformedDataset {
    pub fn new(n: usize, m: usize, y_plus: Vec<f64>, y_minus: Vec<f64>) -> Result<Self> {
        check_shape(n, m, &y_plus, "y_plus")?;
        check_shape(n, m, &y_minus, "y_minus")?;
        Ok(Self {
            n,
            m,
            y_plus,
            y_minus,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn y_plus(&self) -> &[f64] {
        &self.y_plus
    }

    pub fn y_minus(&self) -> &[f64] {
        &self.y_minus
    }

    /// Recovers (y1, y2).
    pub fn reconstruct(&self) -> (Vec<f64>, Vec<f64>) {
        let y1 = self.y_plus.iter().zip(&self.y_minus).map(|(p, q)| p + q).collect();
        let y2 = self.y_plus.iter().zip(&self.y_minus).map(|(p, q)| p - q).collect();
        (y1, y2)
    }
}

pub fn transform_data(ds: &ImageDataset) -> Result<TransformedDataset> {
    let y_plus = ds.y1.iter().zip(&ds.y2).map(|(a, b)| (a + b) / 2.0).collect();
    let y_minus = ds.y1.iter().zip(&ds.y2).map(|(a, b)| (a - b) / 2.0).collect();
    TransformedDataset::new(ds.n, ds.m, y_plus, y_minus)
}
