//! Applications of (−Δ)^s to grid functions.
//!
//! Three independent routes are provided:
//!
//! * [`apply_fl_integral`]: the principal-value singular integral on the
//!   lattice with an exact near-field lattice correction and an analytic
//!   far-field tail outside the grid box;
//! * [`apply_fl_semigroup`]: the time integral of the heat semigroup,
//!   `(1/Γ(−s)) ∫ (e^{tΔ}u − u) t^{−1−s} dt`, on a geometric time grid;
//! * [`apply_fl_multiplier`]: the Fourier symbol `|ξ|^{2s}` on a zero-padded
//!   periodic box. Used only as a whole-space cross-check.

pub(crate) mod heat;
mod integral;
pub(crate) mod kernel;
pub(crate) mod multiplier;

pub use heat::{apply_fl_semigroup, apply_fl_semigroup_with, heat_convolve, HeatQuadrature};
pub use integral::{apply_fl_integral, apply_fl_integral_with, IntegralOptions};
pub use kernel::LatticeKernel;
pub use multiplier::{apply_fl_multiplier, apply_fl_multiplier_with};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::special::{gamma, lattice_defect};

/// `C_{N,s} = s 4^s Γ((N+2s)/2) / (π^{N/2} Γ(1−s))`.
pub fn normalization_constant(n: usize, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidOrder(s));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let nf = n as f64;
    Ok(s * 4f64.powf(s) * gamma((nf + 2.0 * s) / 2.0)
        / (std::f64::consts::PI.powf(nf / 2.0) * gamma(1.0 - s)))
}

/// Order, dimension and the cached normalization constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracParams {
    s: f64,
    dim: usize,
    c_ns: f64,
}

impl FracParams {
    pub fn new(dim: usize, s: f64) -> Result<Self> {
        let c_ns = normalization_constant(dim, s)?;
        if dim > 2 {
            return Err(Error::InvalidParameter(format!("dimension {dim} not supported")));
        }
        Ok(Self { s, dim, c_ns })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn c_ns(&self) -> f64 {
        self.c_ns
    }

    /// Γ(−s) = −Γ(1−s)/s.
    pub fn gamma_neg(&self) -> f64 {
        crate::theory::gamma_reflection(self.s)
    }

    /// Mass of |z|^{2−N−2s} missed by a unit-lattice sum that skips the
    /// origin; multiplies the local second-order term of every near-field
    /// correction.
    pub fn lattice_kappa(&self) -> f64 {
        lattice_defect(self.dim, 2.0 - self.dim as f64 - 2.0 * self.s)
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::GridMismatch(format!(
                "parameters for N = {} used on a {}-dimensional grid",
                self.dim,
                grid.dim()
            )));
        }
        Ok(())
    }
}

/// Nodes at which an operator is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalSet {
    /// Every node off the box boundary.
    Interior,
    Nodes(Vec<usize>),
}

impl EvalSet {
    pub(crate) fn resolve(&self, grid: &Grid) -> Result<Vec<usize>> {
        match self {
            EvalSet::Interior => Ok(grid.interior_nodes()),
            EvalSet::Nodes(v) => {
                for &k in v {
                    if k >= grid.len() {
                        return Err(Error::InvalidParameter(format!("node {k} out of range")));
                    }
                    if grid.on_box_boundary(k) {
                        return Err(Error::BoundaryEvaluation(k));
                    }
                }
                Ok(v.clone())
            }
        }
    }
}

/// Magnitudes reported by one operator application.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FlDiagnostics {
    pub route: String,
    /// Largest far-field contribution (box-exterior tail, large-time
    /// correction or periodization bound).
    pub tail_max: f64,
    /// Largest near-field contribution (lattice or small-time correction).
    pub correction_max: f64,
    pub quadrature_nodes: usize,
    pub eval_nodes: usize,
}

impl FlDiagnostics {
    pub fn to_json(&self) -> Result<String> {
        crate::json::to_sorted_string(self)
    }
}

pub(crate) fn require_support(u: &crate::grid::GridFunction) -> Result<crate::grid::IndexBox> {
    u.support().ok_or(Error::MissingSupport)
}
