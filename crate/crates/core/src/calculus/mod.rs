//! Product rule, cut-off commutators and their decompositions.
//!
//! The commutator `g = (−Δ)^s(ηu) − η(−Δ)^s u = u(−Δ)^s η − I_s(u, η)` is
//! computed through the singular integral and, independently, through the
//! Duhamel representation of its heat evolution.

mod duhamel;

pub use duhamel::{
    commutator_g_heat, commutator_g_heat_with, duhamel_path, duhamel_z, DuhamelState,
    HeatCommutatorReport,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fracop::kernel::{exterior_tail, LatticeKernel};
use crate::fracop::{apply_fl_integral, require_support, EvalSet, FracParams};
use crate::grid::{CutoffPair, DomainMask, Grid, GridFunction};

/// `I_s(u,v)(x) = C [Σ_{y≠x} (u(x)−u(y))(v(x)−v(y)) h^N/|x−y|^{N+2s}
///   + u(x)v(x)·tail(x) + κ h^{2−2s} Γ_h(u,v)(x)/N]`, where
/// `Γ_h(u,v) = Σ_{±e} δu δv / (2h²)` is the discrete carré du champ, so that
/// `(−Δ)^s(uv) = u(−Δ)^s v + v(−Δ)^s u − I_s(u,v)` holds exactly on the lattice.
pub fn product_interaction(
    u: &GridFunction,
    v: &GridFunction,
    params: &FracParams,
    eval: &EvalSet,
) -> Result<GridFunction> {
    let grid = *u.grid();
    grid.ensure_same(v.grid())?;
    params.check_grid(&grid)?;
    let su = require_support(u)?;
    let sv = require_support(v)?;
    let nodes = eval.resolve(&grid)?;
    let s = params.s();
    let c = params.c_ns();
    let h = grid.h();
    let kernel = LatticeKernel::new(&grid, s);
    let corr = params.lattice_kappa() * h.powf(-2.0 * s) / (2.0 * grid.dim() as f64);
    let (uv, vv) = (u.values(), v.values());
    let joint = su.union(&sv).nodes(&grid);

    let vals: Vec<f64> = nodes
        .par_iter()
        .map(|&x| {
            let (ux, vx) = (uv[x], vv[x]);
            let (mut su_w, mut sv_w, mut suv_w) = (0.0, 0.0, 0.0);
            for &y in &joint {
                if y == x {
                    continue;
                }
                let w = kernel.weight(x, y);
                su_w += uv[y] * w;
                sv_w += vv[y] * w;
                suv_w += uv[y] * vv[y] * w;
            }
            let pair = ux * vx * kernel.box_row_sum(x) - (ux * sv_w + vx * su_w) + suv_w;
            let tail = ux * vx * exterior_tail(&grid, s, grid.coord(x));
            let mut gamma = 0.0;
            for nb in grid.neighbours(x) {
                gamma += (uv[nb] - ux) * (vv[nb] - vx);
            }
            c * (pair + tail + corr * gamma)
        })
        .collect();
    let mut out = vec![0.0; grid.len()];
    for (&x, v) in nodes.iter().zip(vals) {
        out[x] = v;
    }
    GridFunction::new(&grid, out)
}

/// Commutator by the singular-integral route together with the residual
/// of the identity `u(−Δ)^sη − I_s(u,η) = (−Δ)^s(ηu) − η(−Δ)^s u`.
#[derive(Debug, Clone)]
pub struct CommutatorIntegral {
    pub g: GridFunction,
    /// Relative discrete L² difference between the two sides.
    pub identity_residual: f64,
}

pub fn commutator_g_integral(u: &GridFunction, cut: &CutoffPair, params: &FracParams) -> Result<CommutatorIntegral> {
    let eta = cut.eta();
    u.grid().ensure_same(eta.grid())?;
    let eval = EvalSet::Interior;
    let fl_eta = apply_fl_integral(eta, params, &eval)?;
    let prod = product_interaction(u, eta, params, &eval)?;
    let g = u.mul(&fl_eta)?.sub(&prod)?;
    let eu = eta.mul(u)?;
    let other = apply_fl_integral(&eu, params, &eval)?.sub(&eta.mul(&apply_fl_integral(u, params, &eval)?)?)?;
    let diff = g.sub(&other)?.norm_l2();
    let scale = g.norm_l2().max(other.norm_l2());
    let identity_residual = if scale == 0.0 { 0.0 } else { diff / scale };
    Ok(CommutatorIntegral { g, identity_residual })
}

/// 𝕀₁ sums the interaction over nodes of Ω (with the near-field lattice
/// term); 𝕀₂ = C η(x)u(x)[Σ_{y∉Ω} h^N/|x−y|^{N+2s} + tail(x)] collects the
/// exterior, where u and η vanish.
pub fn split_i1_i2(
    u: &GridFunction,
    cut: &CutoffPair,
    mask: &DomainMask,
    params: &FracParams,
) -> Result<(GridFunction, GridFunction)> {
    let grid = *u.grid();
    grid.ensure_same(mask.grid())?;
    let eta = cut.eta();
    grid.ensure_same(eta.grid())?;
    params.check_grid(&grid)?;
    require_support(u)?;
    if cut.omega().iter().any(|&k| !mask.is_inside(k)) {
        return Err(Error::InvalidCutoff("outer cut-off set is not contained in the domain".into()));
    }
    if let Some(k) = (0..grid.len()).find(|&k| !mask.is_inside(k) && u.get(k) != 0.0) {
        return Err(Error::InvalidParameter(format!("u does not vanish at exterior node {k}")));
    }
    let s = params.s();
    let c = params.c_ns();
    let h = grid.h();
    let kernel = LatticeKernel::new(&grid, s);
    let corr = params.lattice_kappa() * h.powf(-2.0 * s) / (2.0 * grid.dim() as f64);
    let inside = mask.inside_nodes();
    let (uv, ev) = (u.values(), eta.values());
    let nodes = grid.interior_nodes();
    let pairs: Vec<(f64, f64)> = nodes
        .par_iter()
        .map(|&x| {
            let (ux, ex) = (uv[x], ev[x]);
            let mut in_sum = 0.0;
            let mut in_w = 0.0;
            for &y in &inside {
                if y == x {
                    continue;
                }
                let w = kernel.weight(x, y);
                in_sum += (ux - uv[y]) * (ex - ev[y]) * w;
                in_w += w;
            }
            let mut gamma = 0.0;
            for nb in grid.neighbours(x) {
                gamma += (uv[nb] - ux) * (ev[nb] - ex);
            }
            let i1 = c * (in_sum + corr * gamma);
            let outside_w = kernel.box_row_sum(x) - in_w;
            let i2 = c * ex * ux * (outside_w + exterior_tail(&grid, s, grid.coord(x)));
            (i1, i2)
        })
        .collect();
    let mut i1 = vec![0.0; grid.len()];
    let mut i2 = vec![0.0; grid.len()];
    for (&x, (a, b)) in nodes.iter().zip(pairs) {
        i1[x] = a;
        i2[x] = b;
    }
    Ok((GridFunction::new(&grid, i1)?, GridFunction::new(&grid, i2)?))
}

/// Open interval `(lo, hi)` of admissible exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }
}

/// `[0, 1] ∩ ((4−4s)/(N+2−2s), (4+4s)/(N+2+2s))` for N ≥ 3.
pub fn epsilon_window(n: usize, s: f64) -> Result<Window> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("the window needs N ≥ 3, got {n}")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidOrder(s));
    }
    let nf = n as f64;
    let lo = ((4.0 - 4.0 * s) / (nf + 2.0 - 2.0 * s)).max(0.0);
    let hi = ((4.0 + 4.0 * s) / (nf + 2.0 + 2.0 * s)).min(1.0);
    Ok(Window { lo, hi })
}

pub(crate) fn check_cutoff_resolution(cut: &CutoffPair, grid: &Grid) -> Result<()> {
    if !cut.is_constant() && !(cut.moll_radius() > 4.0 * grid.h()) {
        return Err(Error::InvalidCutoff(format!(
            "mollification band {} must exceed 4h = {} for discrete derivatives",
            cut.moll_radius(),
            4.0 * grid.h()
        )));
    }
    Ok(())
}
