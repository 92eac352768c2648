//! The operator A_D: (−Δ)^s acting on functions that vanish outside Ω,
//! restricted to the nodes of Ω.

mod eigen;
mod energy;
mod semigroup;

pub use eigen::{eigen_dirichlet, eigen_dirichlet_with, EigenPair, EigenReport};
pub use energy::bilinear_energy;
pub use semigroup::{
    semigroup_solve, ultracontractivity_probe, SemigroupReport, UltracontractivityReport,
};

use std::io::Write;
use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fracop::kernel::{exterior_tail, LatticeKernel};
use crate::fracop::FracParams;
use crate::grid::{DomainMask, GridFunction};

/// Default largest number of rows stored as a dense matrix.
pub const DENSE_LIMIT: usize = 4096;

enum Storage {
    Dense(DMatrix<f64>),
    MatrixFree,
}

/// Symmetric positive-definite realization of (−Δ)^s on the nodes of Ω
/// with the nonlocal Dirichlet condition u = 0 on ℝ^N∖Ω.
pub struct DirichletOperator {
    mask: DomainMask,
    params: FracParams,
    index_map: Vec<usize>,
    row_of: Vec<Option<usize>>,
    diag: Vec<f64>,
    tail_diag: Vec<f64>,
    neighbour_weight: f64,
    kernel: LatticeKernel,
    storage: Storage,
    cholesky: OnceLock<Result<Cholesky<f64, Dyn>, String>>,
}

impl std::fmt::Debug for DirichletOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletOperator")
            .field("rows", &self.index_map.len())
            .field("s", &self.params.s())
            .field("dense", &self.is_dense())
            .finish()
    }
}

/// Residual summary of a linear solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub method: String,
    pub rows: usize,
    pub relative_residual: f64,
    pub iterations: usize,
}

pub fn assemble_dirichlet(mask: &DomainMask, params: &FracParams) -> Result<DirichletOperator> {
    assemble_dirichlet_with(mask, params, DENSE_LIMIT)
}

/// Row x of the operator is the singular-integral route restricted to
/// functions vanishing off Ω: off-diagonal entries `−C h^{−2s}|i−j|^{−N−2s}`
/// (plus `−C κ h^{−2s}/(2N)` for axis neighbours) and diagonal
/// `C [Σ_{y≠x in box} w + tail(x) + κ h^{−2s}]`.
pub fn assemble_dirichlet_with(
    mask: &DomainMask,
    params: &FracParams,
    dense_limit: usize,
) -> Result<DirichletOperator> {
    let grid = *mask.grid();
    params.check_grid(&grid)?;
    let index_map = mask.inside_nodes();
    for &k in &index_map {
        let m = grid.multi(k);
        for (a, &ma) in m.iter().enumerate().take(grid.dim()) {
            if ma < 2 || ma + 2 >= grid.shape()[a] {
                return Err(Error::InvalidDomain(format!(
                    "node {k} of the domain lies within two layers of the grid box"
                )));
            }
        }
    }
    let mut row_of = vec![None; grid.len()];
    for (r, &k) in index_map.iter().enumerate() {
        row_of[k] = Some(r);
    }
    let s = params.s();
    let c = params.c_ns();
    let h = grid.h();
    let kernel = LatticeKernel::new(&grid, s);
    let kappa_h = params.lattice_kappa() * h.powf(-2.0 * s);
    let neighbour_weight = -c * kappa_h / (2.0 * grid.dim() as f64);
    let tail_diag: Vec<f64> =
        index_map.iter().map(|&k| c * exterior_tail(&grid, s, grid.coord(k))).collect();
    let diag: Vec<f64> = index_map
        .iter()
        .zip(&tail_diag)
        .map(|(&k, t)| c * (kernel.box_row_sum(k) + kappa_h) + t)
        .collect();
    let n = index_map.len();
    let storage = if n <= dense_limit {
        let mut m = DMatrix::<f64>::zeros(n, n);
        let cols: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|cidx| {
                let y = index_map[cidx];
                let mut col = vec![0.0; n];
                for (r, &x) in index_map.iter().enumerate() {
                    col[r] = if r == cidx { diag[r] } else { -c * kernel.weight(x, y) };
                }
                for nb in grid.neighbours(y) {
                    if let Some(r) = row_of[nb] {
                        col[r] += neighbour_weight;
                    }
                }
                col
            })
            .collect();
        for (cidx, col) in cols.into_iter().enumerate() {
            m.column_mut(cidx).copy_from_slice(&col);
        }
        Storage::Dense(m)
    } else {
        Storage::MatrixFree
    };
    Ok(DirichletOperator {
        mask: mask.clone(),
        params: *params,
        index_map,
        row_of,
        diag,
        tail_diag,
        neighbour_weight,
        kernel,
        storage,
        cholesky: OnceLock::new(),
    })
}

impl DirichletOperator {
    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }

    pub fn params(&self) -> &FracParams {
        &self.params
    }

    pub fn s(&self) -> f64 {
        self.params.s()
    }

    /// Grid node of every matrix row.
    pub fn index_map(&self) -> &[usize] {
        &self.index_map
    }

    pub fn row_of(&self, node: usize) -> Option<usize> {
        self.row_of[node]
    }

    pub fn rows(&self) -> usize {
        self.index_map.len()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Per-row contribution of the integral outside the grid box.
    pub fn tail_diag(&self) -> &[f64] {
        &self.tail_diag
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Dense matrix, when stored.
    pub fn matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.storage {
            Storage::Dense(m) => Some(m),
            Storage::MatrixFree => None,
        }
    }

    /// Builds the dense matrix regardless of storage mode.
    pub fn to_dense(&self) -> DMatrix<f64> {
        if let Some(m) = self.matrix() {
            return m.clone();
        }
        let n = self.rows();
        let mut m = DMatrix::zeros(n, n);
        let mut e = DVector::zeros(n);
        for j in 0..n {
            e[j] = 1.0;
            m.set_column(j, &self.apply(&e));
            e[j] = 0.0;
        }
        m
    }

    /// Entry (r, c) of the matrix.
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        if let Some(m) = self.matrix() {
            return m[(r, c)];
        }
        if r == c {
            return self.diag[r];
        }
        let (x, y) = (self.index_map[r], self.index_map[c]);
        let mut v = -self.params.c_ns() * self.kernel.weight(x, y);
        if self.mask.grid().neighbours(x).any(|nb| nb == y) {
            v += self.neighbour_weight;
        }
        v
    }

    /// Matrix-vector product in row coordinates.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.storage {
            Storage::Dense(m) => m * v,
            Storage::MatrixFree => {
                let c = self.params.c_ns();
                let grid = self.mask.grid();
                let out: Vec<f64> = (0..self.rows())
                    .into_par_iter()
                    .map(|r| {
                        let x = self.index_map[r];
                        let mut far = 0.0;
                        for (q, &y) in self.index_map.iter().enumerate() {
                            if q != r && v[q] != 0.0 {
                                far += self.kernel.weight(x, y) * v[q];
                            }
                        }
                        let mut near = 0.0;
                        for nb in grid.neighbours(x) {
                            if let Some(q) = self.row_of[nb] {
                                near += v[q];
                            }
                        }
                        self.diag[r] * v[r] - c * far + self.neighbour_weight * near
                    })
                    .collect();
                DVector::from_vec(out)
            }
        }
    }

    /// Applies the operator to a grid function, returning a grid function
    /// that vanishes off Ω.
    pub fn apply_grid(&self, u: &GridFunction) -> Result<GridFunction> {
        let v = self.restrict(u)?;
        self.extend(&self.apply(&v))
    }

    /// Values on the rows of Ω.
    pub fn restrict(&self, u: &GridFunction) -> Result<DVector<f64>> {
        self.mask.grid().ensure_same(u.grid())?;
        Ok(DVector::from_iterator(self.rows(), self.index_map.iter().map(|&k| u.get(k))))
    }

    /// Extension by zero of a row vector to the whole grid.
    pub fn extend(&self, v: &DVector<f64>) -> Result<GridFunction> {
        let grid = self.mask.grid();
        let mut values = vec![0.0; grid.len()];
        for (r, &k) in self.index_map.iter().enumerate() {
            values[k] = v[r];
        }
        GridFunction::new(grid, values)?.with_support(self.mask.support_box())
    }

    fn cholesky(&self) -> Result<&Cholesky<f64, Dyn>> {
        let m = self.matrix().ok_or_else(|| Error::LinearAlgebra("matrix-free operator".into()))?;
        self.cholesky
            .get_or_init(|| {
                Cholesky::new(m.clone()).ok_or_else(|| "matrix is not positive definite".to_string())
            })
            .as_ref()
            .map_err(|e| Error::LinearAlgebra(e.clone()))
    }

    /// Solves A x = b in row coordinates: Cholesky when dense, otherwise
    /// Jacobi-preconditioned conjugate gradients.
    pub fn solve_rows(&self, b: &DVector<f64>) -> Result<(DVector<f64>, SolveReport)> {
        let bnorm = b.norm();
        if bnorm == 0.0 {
            let report = SolveReport {
                method: "trivial".into(),
                rows: self.rows(),
                relative_residual: 0.0,
                iterations: 0,
            };
            return Ok((DVector::zeros(self.rows()), report));
        }
        let (x, method, iterations) = if self.is_dense() {
            let mut x = self.cholesky()?.solve(b);
            // one step of iterative refinement
            let r = b - self.apply(&x);
            x += self.cholesky()?.solve(&r);
            (x, "cholesky", 1)
        } else {
            let (x, it) = self.conjugate_gradient(b, 1e-12)?;
            (x, "conjugate_gradient", it)
        };
        let res = (b - self.apply(&x)).norm() / bnorm;
        let report = SolveReport {
            method: method.into(),
            rows: self.rows(),
            relative_residual: res,
            iterations,
        };
        Ok((x, report))
    }

    fn conjugate_gradient(&self, b: &DVector<f64>, tol: f64) -> Result<(DVector<f64>, usize)> {
        let n = self.rows();
        let inv_diag = DVector::from_iterator(n, self.diag.iter().map(|d| 1.0 / d));
        let mut x = DVector::zeros(n);
        let mut r = b.clone();
        let mut z = r.component_mul(&inv_diag);
        let mut p = z.clone();
        let mut rz = r.dot(&z);
        let bnorm = b.norm();
        for it in 1..=10 * n.max(100) {
            let ap = self.apply(&p);
            let alpha = rz / p.dot(&ap);
            x.axpy(alpha, &p, 1.0);
            r.axpy(-alpha, &ap, 1.0);
            if r.norm() <= tol * bnorm {
                return Ok((x, it));
            }
            z = r.component_mul(&inv_diag);
            let rz_new = r.dot(&z);
            p = &z + (rz_new / rz) * &p;
            rz = rz_new;
        }
        Err(Error::NoConvergence("conjugate gradients exhausted the iteration budget".into()))
    }

    /// Writes the matrix in Matrix Market coordinate format (lower triangle,
    /// symmetric).
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.rows();
        writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(out, "% rows are domain nodes in increasing grid index order")?;
        writeln!(out, "{n} {n} {}", n * (n + 1) / 2)?;
        for c in 0..n {
            for r in c..n {
                writeln!(out, "{} {} {}", r + 1, c + 1, self.entry(r, c))?;
            }
        }
        Ok(())
    }
}

/// Solves A_D u = f on Ω; u vanishes elsewhere.
pub fn solve_dirichlet(op: &DirichletOperator, f: &GridFunction) -> Result<GridFunction> {
    Ok(solve_dirichlet_with(op, f)?.0)
}

pub fn solve_dirichlet_with(op: &DirichletOperator, f: &GridFunction) -> Result<(GridFunction, SolveReport)> {
    let b = op.restrict(f)?;
    let (x, report) = op.solve_rows(&b)?;
    if !(report.relative_residual <= 1e-10) {
        return Err(Error::LinearAlgebra(format!(
            "relative residual {:.3e} above 1e-10",
            report.relative_residual
        )));
    }
    Ok((op.extend(&x)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_domain, Grid, Shape};

    fn small(s: f64) -> DirichletOperator {
        let g = Grid::centered_1d(2.0, 4).unwrap();
        let mask = make_domain(&g, Shape::interval(-1.0, 1.0)).unwrap();
        assemble_dirichlet(&mask, &FracParams::new(1, s).unwrap()).unwrap()
    }

    #[test]
    fn structure_of_the_matrix() {
        let op = small(0.4);
        let m = op.matrix().unwrap();
        assert_eq!(m, &m.transpose());
        for r in 0..op.rows() {
            assert!(m[(r, r)] > 0.0);
            let off: f64 = (0..op.rows()).filter(|&c| c != r).map(|c| m[(r, c)]).sum();
            assert!(m[(r, r)] + off > 0.0);
            for c in 0..op.rows() {
                if c != r {
                    assert!(m[(r, c)] <= 0.0);
                }
            }
        }
    }

    #[test]
    fn matrix_free_matches_dense() {
        let g = Grid::centered_2d(2.0, 3).unwrap();
        let mask = make_domain(&g, Shape::ball(&[0.0, 0.0], 1.0)).unwrap();
        let p = FracParams::new(2, 0.6).unwrap();
        let dense = assemble_dirichlet(&mask, &p).unwrap();
        let free = assemble_dirichlet_with(&mask, &p, 0).unwrap();
        assert!(!free.is_dense());
        let v = DVector::from_fn(dense.rows(), |i, _| ((i * 7 % 13) as f64 - 6.0) / 5.0);
        let diff = (dense.apply(&v) - free.apply(&v)).norm();
        assert!(diff < 1e-12 * dense.apply(&v).norm());
        assert!((free.to_dense() - dense.matrix().unwrap()).abs().max() < 1e-12);
        let (x1, _) = dense.solve_rows(&v).unwrap();
        let (x2, rep) = free.solve_rows(&v).unwrap();
        assert!(rep.relative_residual < 1e-10);
        assert!((x1 - x2).norm() < 1e-9);
    }

    #[test]
    fn matrix_market_header() {
        let op = small(0.5);
        let mut buf = Vec::new();
        op.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let n = op.rows();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric\n"));
        assert_eq!(text.lines().count(), 3 + n * (n + 1) / 2);
    }

    #[test]
    fn rejects_unpadded_domains() {
        let g = Grid::centered_1d(2.0, 4).unwrap();
        let mask = make_domain(&g, Shape::interval(-1.0, 1.0)).unwrap();
        assert!(assemble_dirichlet(&mask, &FracParams::new(2, 0.5).unwrap()).is_err());
    }
}
