//! Uniform Cartesian lattices, domain masks, grid functions and cut-offs.

mod cutoff;
mod domain;
mod function;
pub mod io;

pub use cutoff::{build_cutoff, smooth_step, CutoffPair};
pub use domain::{make_domain, DistanceKind, DomainMask, Shape};
pub use function::{GridFunction, IndexBox};
pub(crate) use function::lp_norm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform axis-aligned lattice in one or two dimensions.
///
/// Node `(i, j)` sits at `origin + (i, j)·h`; coordinates are always
/// recomputed from the index, never accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    h: f64,
    origin: [f64; 2],
    extent: [usize; 2],
}

impl Grid {
    pub fn new(dim: usize, origin: &[f64], h: f64, extent: &[usize]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if origin.len() != dim || extent.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "origin/extent must have {dim} components"
            )));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing h = {h} must be positive")));
        }
        if extent.iter().any(|&n| n < 3) {
            return Err(Error::InvalidGrid(format!(
                "extent {extent:?} must be at least 3 per axis"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        let mut o = [0.0; 2];
        let mut e = [1usize; 2];
        o[..dim].copy_from_slice(origin);
        e[..dim].copy_from_slice(extent);
        Ok(Self { dim, h, origin: o, extent: e })
    }

    /// Symmetric 1D lattice on `[-half_width, half_width]` with `2^level`
    /// cells per unit length.
    pub fn centered_1d(half_width: f64, level: u32) -> Result<Self> {
        let h = 2f64.powi(-(level as i32));
        let n = (2.0 * half_width / h).round() as usize + 1;
        Self::new(1, &[-half_width], h, &[n])
    }

    /// Symmetric 2D lattice on `[-half_width, half_width]²`.
    pub fn centered_2d(half_width: f64, level: u32) -> Result<Self> {
        let h = 2f64.powi(-(level as i32));
        let n = (2.0 * half_width / h).round() as usize + 1;
        Self::new(2, &[-half_width, -half_width], h, &[n, n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent[..self.dim]
    }

    /// Per-axis node counts padded with 1 for unused axes.
    pub fn shape(&self) -> [usize; 2] {
        self.extent
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.extent[0] * self.extent[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `h^dim`, the cell volume.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    #[inline]
    pub fn flat(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.extent[0] && j < self.extent[1]);
        j * self.extent[0] + i
    }

    #[inline]
    pub fn multi(&self, idx: usize) -> [usize; 2] {
        [idx % self.extent[0], idx / self.extent[0]]
    }

    /// Coordinates of a node; the second entry is 0 in one dimension.
    #[inline]
    pub fn coord(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.multi(idx);
        let mut p = [self.origin[0] + i as f64 * self.h, 0.0];
        if self.dim == 2 {
            p[1] = self.origin[1] + j as f64 * self.h;
        }
        p
    }

    /// Largest coordinate along each axis.
    pub fn upper(&self) -> [f64; 2] {
        let mut u = [0.0; 2];
        for (a, item) in u.iter_mut().enumerate().take(self.dim) {
            *item = self.origin[a] + (self.extent[a] - 1) as f64 * self.h;
        }
        u
    }

    /// Bounds of the union of node cells, `[origin - h/2, upper + h/2]`.
    /// Node sums integrate over exactly this box.
    pub fn cell_box(&self) -> ([f64; 2], [f64; 2]) {
        let up = self.upper();
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for a in 0..self.dim {
            lo[a] = self.origin[a] - 0.5 * self.h;
            hi[a] = up[a] + 0.5 * self.h;
        }
        (lo, hi)
    }

    /// Diameter of the node box.
    pub fn diameter(&self) -> f64 {
        let up = self.upper();
        (0..self.dim)
            .map(|a| (up[a] - self.origin[a]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// True when the node touches the outer face of the box.
    pub fn on_box_boundary(&self, idx: usize) -> bool {
        let m = self.multi(idx);
        (0..self.dim).any(|a| m[a] == 0 || m[a] + 1 == self.extent[a])
    }

    /// Axis-neighbour indices (`2·dim` of them) of an interior node.
    pub fn neighbours(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let [i, j] = self.multi(idx);
        let nx = self.extent[0];
        let base = j * nx + i;
        let mut out = [usize::MAX; 4];
        if i > 0 {
            out[0] = base - 1;
        }
        if i + 1 < nx {
            out[1] = base + 1;
        }
        if self.dim == 2 {
            if j > 0 {
                out[2] = base - nx;
            }
            if j + 1 < self.extent[1] {
                out[3] = base + nx;
            }
        }
        out.into_iter().filter(|&v| v != usize::MAX)
    }

    /// Nodes that are not on the box boundary.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.on_box_boundary(k)).collect()
    }

    /// Discrete five-point (three-point in 1D) Laplacian at an interior node.
    #[inline]
    pub fn laplacian_at(&self, values: &[f64], idx: usize) -> f64 {
        let h2 = self.h * self.h;
        let nx = self.extent[0];
        let mut acc = values[idx - 1] + values[idx + 1] - 2.0 * values[idx];
        if self.dim == 2 {
            acc += values[idx - nx] + values[idx + nx] - 2.0 * values[idx];
        }
        acc / h2
    }

    /// Centered gradient at an interior node.
    #[inline]
    pub fn gradient_at(&self, values: &[f64], idx: usize) -> [f64; 2] {
        let nx = self.extent[0];
        let inv = 0.5 / self.h;
        let gx = (values[idx + 1] - values[idx - 1]) * inv;
        let gy = if self.dim == 2 {
            (values[idx + nx] - values[idx - nx]) * inv
        } else {
            0.0
        };
        [gx, gy]
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Euclidean distance between two points of a `dim`-dimensional lattice.
#[inline]
pub(crate) fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
