use crate::error::Result;
use crate::fracop::kernel::{exterior_tail, LatticeKernel};
use crate::fracop::{require_support, FracParams};
use crate::grid::{GridFunction, IndexBox};

/// Discrete form
/// `(C/2) Σ_{x≠y} (u(x)−u(y))(v(x)−v(y)) h^{2N}/|x−y|^{N+2s}
///   + C h^N Σ u v tail + C κ h^{2−2s}/(2N) h^N Σ_edges δu δv / h²`,
/// equal to `Σ v (A u) h^N` for the operator of the singular-integral route.
///
/// Every summand is symmetric in (u, v), so the form is bitwise symmetric.
pub fn bilinear_energy(u: &GridFunction, v: &GridFunction, params: &FracParams) -> Result<f64> {
    let grid = *u.grid();
    grid.ensure_same(v.grid())?;
    params.check_grid(&grid)?;
    let b = require_support(u)?.union(&require_support(v)?);
    let s = params.s();
    let c = params.c_ns();
    let h = grid.h();
    let vol = grid.cell_volume();
    let kernel = LatticeKernel::new(&grid, s);
    let nodes = b.nodes(&grid);
    let (uv, vv) = (u.values(), v.values());

    // pairs inside the joint support box, and pairs with one end outside it
    let mut pair = 0.0;
    let mut single = 0.0;
    for (a, &x) in nodes.iter().enumerate() {
        let mut inside_row = 0.0;
        for &y in &nodes[a + 1..] {
            let w = kernel.weight(x, y);
            pair += (uv[x] - uv[y]) * (vv[x] - vv[y]) * w;
            inside_row += w;
        }
        for &y in &nodes[..a] {
            inside_row += kernel.weight(x, y);
        }
        let outside = kernel.box_row_sum(x) - inside_row;
        single += uv[x] * vv[x] * (outside + exterior_tail(&grid, s, grid.coord(x)));
    }

    // edges touching the support box
    let [nx, ny] = grid.shape();
    let grown = IndexBox {
        lo: [b.lo[0].saturating_sub(1), b.lo[1].saturating_sub(1)],
        hi: [(b.hi[0] + 1).min(nx - 1), (b.hi[1] + 1).min(ny - 1)],
    };
    let mut edges = 0.0;
    for x in grown.nodes(&grid) {
        let [i, j] = grid.multi(x);
        if i + 1 < nx && i < grown.hi[0] {
            edges += (uv[x + 1] - uv[x]) * (vv[x + 1] - vv[x]);
        }
        if grid.dim() == 2 && j + 1 < ny && j < grown.hi[1] {
            edges += (uv[x + nx] - uv[x]) * (vv[x + nx] - vv[x]);
        }
    }
    let n_dim = grid.dim() as f64;
    let corr = params.lattice_kappa() * h.powf(-2.0 * s) / (2.0 * n_dim);
    Ok(c * vol * (pair + single + corr * edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracop::{apply_fl_integral, EvalSet};
    use crate::grid::Grid;
    use proptest::prelude::*;

    fn grid() -> Grid {
        Grid::new(2, &[-1.0, -1.0], 0.25, &[9, 9]).unwrap()
    }

    fn interior_function(vals: &[f64]) -> GridFunction {
        let g = grid();
        let mut full = vec![0.0; g.len()];
        let mut it = vals.iter();
        for j in 2..7 {
            for i in 2..7 {
                full[g.flat(i, j)] = *it.next().unwrap();
            }
        }
        GridFunction::new(&g, full).unwrap().with_support(IndexBox { lo: [2, 2], hi: [6, 6] }).unwrap()
    }

    proptest! {
        #[test]
        fn symmetric_nonnegative_and_consistent(
            a in prop::collection::vec(-2.0f64..2.0, 25),
            b in prop::collection::vec(-2.0f64..2.0, 25),
        ) {
            let p = FracParams::new(2, 0.35).unwrap();
            let (u, v) = (interior_function(&a), interior_function(&b));
            let euv = bilinear_energy(&u, &v, &p).unwrap();
            let evu = bilinear_energy(&v, &u, &p).unwrap();
            prop_assert_eq!(euv.to_bits(), evu.to_bits());
            prop_assert!(bilinear_energy(&u, &u, &p).unwrap() >= 0.0);
            let au = apply_fl_integral(&u, &p, &EvalSet::Interior).unwrap();
            let weak = au.dot(&v).unwrap();
            prop_assert!((weak - euv).abs() <= 1e-10 * (1.0 + euv.abs()));
        }
    }
}
