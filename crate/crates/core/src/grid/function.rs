use serde::{Deserialize, Serialize};

use super::Grid;
use crate::error::{Error, Result};

/// Inclusive index box `lo..=hi` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexBox {
    pub lo: [usize; 2],
    pub hi: [usize; 2],
}

impl IndexBox {
    pub fn full(grid: &Grid) -> Self {
        let e = grid.shape();
        IndexBox { lo: [0, 0], hi: [e[0] - 1, e[1] - 1] }
    }

    /// Smallest box containing the given nodes, `None` when empty.
    pub fn enclosing(grid: &Grid, nodes: impl Iterator<Item = usize>) -> Option<Self> {
        let mut lo = [usize::MAX; 2];
        let mut hi = [0usize; 2];
        let mut any = false;
        for k in nodes {
            any = true;
            let m = grid.multi(k);
            for a in 0..2 {
                lo[a] = lo[a].min(m[a]);
                hi[a] = hi[a].max(m[a]);
            }
        }
        any.then_some(IndexBox { lo, hi })
    }

    #[inline]
    pub fn contains(&self, m: [usize; 2]) -> bool {
        (0..2).all(|a| self.lo[a] <= m[a] && m[a] <= self.hi[a])
    }

    pub fn union(&self, other: &IndexBox) -> IndexBox {
        IndexBox {
            lo: [self.lo[0].min(other.lo[0]), self.lo[1].min(other.lo[1])],
            hi: [self.hi[0].max(other.hi[0]), self.hi[1].max(other.hi[1])],
        }
    }

    /// Intersection; `None` when disjoint.
    pub fn intersect(&self, other: &IndexBox) -> Option<IndexBox> {
        let lo = [self.lo[0].max(other.lo[0]), self.lo[1].max(other.lo[1])];
        let hi = [self.hi[0].min(other.hi[0]), self.hi[1].min(other.hi[1])];
        (lo[0] <= hi[0] && lo[1] <= hi[1]).then_some(IndexBox { lo, hi })
    }

    /// Flat node indices inside the box, row-major.
    pub fn nodes(&self, grid: &Grid) -> Vec<usize> {
        let mut out = Vec::new();
        for j in self.lo[1]..=self.hi[1] {
            for i in self.lo[0]..=self.hi[0] {
                out.push(grid.flat(i, j));
            }
        }
        out
    }
}

/// Real values on the nodes of a grid, extended by zero outside the box.
///
/// When `support` is declared, every value outside it is exactly `0.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    support: Option<IndexBox>,
}

impl GridFunction {
    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: *grid, values: vec![0.0; grid.len()], support: None }
    }

    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite value at node {k}")));
        }
        Ok(Self { grid: *grid, values, support: None })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.coord(k))).collect();
        Self { grid: *grid, values, support: None }
    }

    /// Declares `support`; fails unless every value outside it is zero.
    pub fn with_support(mut self, support: IndexBox) -> Result<Self> {
        for k in 0..self.values.len() {
            if !support.contains(self.grid.multi(k)) && self.values[k].to_bits() != 0 {
                if self.values[k] == 0.0 {
                    // normalize -0.0
                    self.values[k] = 0.0;
                    continue;
                }
                return Err(Error::InvalidParameter(format!(
                    "value {} at node {k} lies outside the declared support",
                    self.values[k]
                )));
            }
        }
        self.support = Some(support);
        Ok(self)
    }

    /// Declares the tight support of the nonzero values (the whole box when
    /// the function vanishes identically, so that the declaration is never
    /// empty).
    pub fn with_tight_support(self) -> Self {
        let b = IndexBox::enclosing(&self.grid, (0..self.values.len()).filter(|&k| self.values[k] != 0.0))
            .unwrap_or_else(|| IndexBox::full(&self.grid));
        self.with_support(b).expect("tight support is valid")
    }

    /// Zeroes every node outside the mask and declares the mask's box as support.
    pub fn restricted_to(&self, mask: &super::DomainMask) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| if mask.is_inside(k) { v } else { 0.0 })
            .collect();
        Self { grid: self.grid, values, support: None }
            .with_support(mask.support_box())
            .expect("masked values vanish outside the mask box")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn support(&self) -> Option<IndexBox> {
        self.support
    }

    #[inline]
    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values, support: None })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.zip_with(other, |a, b| a + b)?;
        if let (Some(a), Some(b)) = (self.support, other.support) {
            out = out.with_support(a.union(&b))?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.zip_with(other, |a, b| a - b)?;
        if let (Some(a), Some(b)) = (self.support, other.support) {
            out = out.with_support(a.union(&b))?;
        }
        Ok(out)
    }

    /// Pointwise product; the support is the intersection of declared supports.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let out = self.zip_with(other, |a, b| a * b)?;
        let support = match (self.support, other.support) {
            (Some(a), Some(b)) => Some(a.intersect(&b).unwrap_or(a)),
            (Some(a), None) | (None, Some(a)) => Some(a),
            (None, None) => None,
        };
        match support {
            Some(b) => out.with_support(b),
            None => Ok(out),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let values = self.values.iter().map(|v| c * v).collect();
        let out = Self { grid: self.grid, values, support: None };
        match self.support {
            Some(b) => out.with_support(b).expect("scaling preserves zeros"),
            None => out,
        }
    }

    /// Discrete L^p norm `(Σ |u|^p h^N)^{1/p}`; `p = ∞` gives the max norm.
    pub fn norm_lp(&self, p: f64) -> f64 {
        lp_norm(&self.values, p, self.grid.cell_volume())
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_lp(2.0)
    }

    /// Discrete integral `Σ u h^N`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Discrete inner product `Σ u v h^N`.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
            * self.grid.cell_volume())
    }
}

/// `(Σ |v|^p · vol)^{1/p}`, or the max norm for infinite `p`.
pub(crate) fn lp_norm(values: &[f64], p: f64, vol: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    let sum: f64 = if p == 2.0 {
        values.iter().map(|v| v * v).sum()
    } else if p == 1.0 {
        values.iter().map(|v| v.abs()).sum()
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum()
    };
    (sum * vol).powf(1.0 / p)
}
