use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Marker stored for lattice points outside the mask.
const UNMASKED: usize = usize::MAX;

/// A regular 2D or 3D lattice with a voxel mask.
///
/// Lattice points are scanned with the last axis fastest. Masked voxels are
/// numbered in that scan order; coordinates map each index to `i/(size−1)` per
/// axis (0 for axes of size 1).
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    dims: Vec<usize>,
    mask: Vec<bool>,
    lattice_of: Vec<usize>,
    voxel_of: Vec<usize>,
    coords: Vec<f64>,
}

impl GridDomain {
    /// Grid with every lattice point inside the mask.
    pub fn full(dims: &[usize]) -> Result<Self> {
        let len = lattice_len(dims)?;
        Self::with_mask(dims, vec![true; len])
    }

    pub fn with_mask(dims: &[usize], mask: Vec<bool>) -> Result<Self> {
        let len = lattice_len(dims)?;
        if mask.len() != len {
            return Err(Error::Shape(format!(
                "mask has {} entries, lattice has {len}",
                mask.len()
            )));
        }
        let d = dims.len();
        let mut lattice_of = Vec::new();
        let mut voxel_of = vec![UNMASKED; len];
        let mut coords = Vec::new();
        let mut idx = vec![0usize; d];
        for (p, &inside) in mask.iter().enumerate() {
            if inside {
                voxel_of[p] = lattice_of.len();
                lattice_of.push(p);
                for (a, &i) in idx.iter().enumerate() {
                    coords.push(if dims[a] > 1 {
                        i as f64 / (dims[a] - 1) as f64
                    } else {
                        0.0
                    });
                }
            }
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        if lattice_of.is_empty() {
            return Err(Error::InvalidParam("mask selects no voxels".into()));
        }
        Ok(Self {
            dims: dims.to_vec(),
            mask,
            lattice_of,
            voxel_of,
            coords,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Number of masked voxels.
    pub fn m(&self) -> usize {
        self.lattice_of.len()
    }

    pub fn lattice_len(&self) -> usize {
        self.mask.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Coordinates of voxel `j`, one entry per axis.
    pub fn coord(&self, j: usize) -> &[f64] {
        let d = self.ndim();
        &self.coords[j * d..(j + 1) * d]
    }

    /// All coordinates, voxel-major.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn lattice_index(&self, j: usize) -> usize {
        self.lattice_of[j]
    }

    pub fn voxel_at(&self, lattice: usize) -> Option<usize> {
        match self.voxel_of.get(lattice) {
            Some(&v) if v != UNMASKED => Some(v),
            _ => None,
        }
    }

    /// Per-axis lattice position of voxel `j`.
    pub fn position(&self, j: usize) -> Vec<usize> {
        let mut p = self.lattice_of[j];
        let mut pos = vec![0; self.ndim()];
        for a in (0..self.ndim()).rev() {
            pos[a] = p % self.dims[a];
            p /= self.dims[a];
        }
        pos
    }

    /// Masked face neighbours of voxel `j` (4 in 2D, 6 in 3D at most).
    pub fn face_neighbors(&self, j: usize) -> Vec<usize> {
        let p = self.lattice_of[j];
        let pos = self.position(j);
        let mut out = Vec::with_capacity(2 * self.ndim());
        let mut stride = 1;
        for a in (0..self.ndim()).rev() {
            if pos[a] > 0 {
                if let Some(v) = self.voxel_at(p - stride) {
                    out.push(v);
                }
            }
            if pos[a] + 1 < self.dims[a] {
                if let Some(v) = self.voxel_at(p + stride) {
                    out.push(v);
                }
            }
            stride *= self.dims[a];
        }
        out
    }

    /// Euclidean distance between voxels `i` and `j` in unit coordinates.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let s: f64 = self
            .coord(i)
            .iter()
            .zip(self.coord(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        libm::sqrt(s)
    }
}

fn lattice_len(dims: &[usize]) -> Result<usize> {
    if !(2..=3).contains(&dims.len()) {
        return Err(Error::InvalidParam(format!(
            "grids must be 2D or 3D, got {} axes",
            dims.len()
        )));
    }
    if dims.iter().any(|&s| s == 0) {
        return Err(Error::InvalidParam("grid axis of size 0".into()));
    }
    dims.iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .ok_or_else(|| Error::InvalidParam("lattice size overflows".into()))
}
