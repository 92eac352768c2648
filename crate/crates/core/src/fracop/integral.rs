use rayon::prelude::*;

use super::kernel::{exterior_tail, LatticeKernel};
use super::{require_support, EvalSet, FlDiagnostics, FracParams};
use crate::error::Result;
use crate::grid::GridFunction;

/// Switches of the singular-integral route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralOptions {
    /// Include the analytic integral over the exterior of the grid box.
    /// Disable only for inputs that do not vanish outside the box.
    pub exterior_tail: bool,
    /// Include the near-field lattice correction.
    pub lattice_correction: bool,
}

impl Default for IntegralOptions {
    fn default() -> Self {
        Self { exterior_tail: true, lattice_correction: true }
    }
}

/// (−Δ)^s u by the singular integral, evaluated at `eval`; zero elsewhere.
pub fn apply_fl_integral(u: &GridFunction, params: &FracParams, eval: &EvalSet) -> Result<GridFunction> {
    Ok(apply_fl_integral_with(u, params, eval, IntegralOptions::default())?.0)
}

/// At node x returns
/// `C [ Σ_{y≠x} (u(x)−u(y)) h^N/|x−y|^{N+2s} + u(x)·tail(x) − κ h^{2−2s} Δ_h u(x)/(2N) ]`
/// where the sum runs over the box, `tail` integrates the kernel outside the
/// box and the last term restores the kernel mass a lattice sum misses near
/// the singularity.
pub fn apply_fl_integral_with(
    u: &GridFunction,
    params: &FracParams,
    eval: &EvalSet,
    opts: IntegralOptions,
) -> Result<(GridFunction, FlDiagnostics)> {
    let grid = *u.grid();
    params.check_grid(&grid)?;
    let support = require_support(u)?;
    let nodes = eval.resolve(&grid)?;
    let s = params.s();
    let c = params.c_ns();
    let h = grid.h();
    let n_dim = grid.dim() as f64;
    let kernel = LatticeKernel::new(&grid, s);
    let corr_scale = params.lattice_kappa() * h.powf(2.0 - 2.0 * s) / (2.0 * n_dim);
    let values = u.values();
    let supp = support.nodes(&grid);
    let supp_vals: Vec<(usize, f64)> =
        supp.into_iter().map(|y| (y, values[y])).filter(|&(_, v)| v != 0.0).collect();

    let results: Vec<(f64, f64, f64)> = nodes
        .par_iter()
        .map(|&x| {
            let ux = values[x];
            let mut far = 0.0;
            for &(y, uy) in &supp_vals {
                if y != x {
                    far += uy * kernel.weight(x, y);
                }
            }
            let local = ux * kernel.box_row_sum(x) - far;
            let tail = if opts.exterior_tail { ux * exterior_tail(&grid, s, grid.coord(x)) } else { 0.0 };
            let corr = if opts.lattice_correction {
                -corr_scale * grid.laplacian_at(values, x)
            } else {
                0.0
            };
            (c * (local + tail + corr), c * tail, c * corr)
        })
        .collect();

    let mut out = vec![0.0; grid.len()];
    let mut diag = FlDiagnostics {
        route: "integral".into(),
        eval_nodes: nodes.len(),
        ..Default::default()
    };
    for (&x, &(v, t, k)) in nodes.iter().zip(&results) {
        out[x] = v;
        diag.tail_max = diag.tail_max.max(t.abs());
        diag.correction_max = diag.correction_max.max(k.abs());
    }
    Ok((GridFunction::new(&grid, out)?, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn constant_on_the_box_without_tail_is_annihilated() {
        let g = Grid::new(2, &[-1.0, -1.0], 0.125, &[17, 17]).unwrap();
        let u = GridFunction::from_fn(&g, |_| 3.5).with_tight_support();
        let p = FracParams::new(2, 0.4).unwrap();
        let opts = IntegralOptions { exterior_tail: false, lattice_correction: true };
        let (out, _) = apply_fl_integral_with(&u, &p, &EvalSet::Interior, opts).unwrap();
        assert!(out.max_abs() < 1e-12);
    }

    #[test]
    fn requires_support_and_interior_nodes() {
        let g = Grid::new(1, &[-1.0], 0.125, &[17]).unwrap();
        let p = FracParams::new(1, 0.5).unwrap();
        let u = GridFunction::from_fn(&g, |x| (1.0 - x[0] * x[0]).max(0.0));
        assert!(apply_fl_integral(&u, &p, &EvalSet::Interior).is_err());
        let u = u.with_tight_support();
        assert!(apply_fl_integral(&u, &p, &EvalSet::Nodes(vec![0])).is_err());
    }
}
