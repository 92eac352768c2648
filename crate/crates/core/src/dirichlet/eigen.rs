use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::DirichletOperator;
use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Eigenvalue with its eigenvector, normalized to unit discrete L² norm
/// (Σ v² h^N = 1) with positive node sum.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub vec: GridFunction,
    /// Discrete L² norm of A v − λ v.
    pub residual: f64,
}

/// Summary of an eigen computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenReport {
    pub method: String,
    pub iterations: usize,
    pub lambdas: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// The k smallest eigenpairs, ascending, with residual tolerance 1e-9·λ.
pub fn eigen_dirichlet(op: &DirichletOperator, k: usize) -> Result<Vec<EigenPair>> {
    Ok(eigen_dirichlet_with(op, k, 1e-9)?.0)
}

/// Block inverse iteration with Rayleigh–Ritz for k ≤ 10, a dense symmetric
/// eigensolve otherwise.
pub fn eigen_dirichlet_with(
    op: &DirichletOperator,
    k: usize,
    tol: f64,
) -> Result<(Vec<EigenPair>, EigenReport)> {
    let n = op.rows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("requested {k} eigenpairs of a {n}-row operator")));
    }
    let (values, vectors, method, iterations) = if k <= 10 && n > 2 * k + 2 {
        let (v, x, it) = subspace_iteration(op, k, tol)?;
        (v, x, "block_inverse_iteration", it)
    } else {
        let eig = SymmetricEigen::new(op.to_dense());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals: Vec<f64> = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = DMatrix::from_fn(n, k, |r, c| eig.eigenvectors[(r, order[c])]);
        (vals, vecs, "dense_symmetric", 1)
    };
    let vol = op.mask().grid().cell_volume();
    let mut pairs = Vec::with_capacity(k);
    for (j, &lambda) in values.iter().enumerate() {
        let mut v: DVector<f64> = vectors.column(j).into_owned();
        let scale = 1.0 / (v.norm_squared() * vol).sqrt();
        let sign = orientation(&v);
        v *= sign * scale;
        let residual = (op.apply(&v) - lambda * &v).norm() * vol.sqrt();
        if !(residual <= tol * lambda.abs().max(1.0)) {
            return Err(Error::NoConvergence(format!(
                "eigenpair {j}: residual {residual:.3e} above tolerance"
            )));
        }
        pairs.push(EigenPair { lambda, vec: op.extend(&v)?, residual });
    }
    let report = EigenReport {
        method: method.into(),
        iterations,
        lambdas: pairs.iter().map(|p| p.lambda).collect(),
        residuals: pairs.iter().map(|p| p.residual).collect(),
    };
    Ok((pairs, report))
}

/// Sign making the node sum positive; for vectors with vanishing sum (odd
/// modes) the first clearly nonzero entry is made positive instead.
fn orientation(v: &DVector<f64>) -> f64 {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    let sum = v.sum();
    let pick = if sum.abs() > 1e-6 * l1 {
        sum
    } else {
        let max = v.amax();
        v.iter().copied().find(|x| x.abs() > 1e-3 * max).unwrap_or(1.0)
    };
    if pick < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn subspace_iteration(op: &DirichletOperator, k: usize, tol: f64) -> Result<(Vec<f64>, DMatrix<f64>, usize)> {
    let n = op.rows();
    let b = (2 * k + 2).min(n);
    // deterministic, well-mixed start block
    let mut x = DMatrix::from_fn(n, b, |i, j| {
        let t = (i + 1) as f64 * (j as f64 + 1.618_033_988_75);
        (t * 0.754_877_666).sin() + if j == 0 { 1.0 } else { 0.0 }
    });
    for it in 1..=1000 {
        let mut y = DMatrix::zeros(n, b);
        for j in 0..b {
            let (col, _) = op.solve_rows(&x.column(j).into_owned())?;
            y.set_column(j, &col);
        }
        let q = y.qr().q();
        let mut aq = DMatrix::zeros(n, b);
        for j in 0..b {
            aq.set_column(j, &op.apply(&q.column(j).into_owned()));
        }
        let mut hmat = q.transpose() * &aq;
        hmat = (&hmat + hmat.transpose()) * 0.5;
        let eig = SymmetricEigen::new(hmat);
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&a, &c| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[c]));
        let v = DMatrix::from_fn(b, b, |r, c| eig.eigenvectors[(r, order[c])]);
        let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        x = &q * &v;
        let ax = &aq * &v;
        let converged = (0..k).all(|j| {
            let r = ax.column(j) - theta[j] * x.column(j);
            r.norm() <= 0.1 * tol * theta[j].abs().max(1.0)
        });
        if converged {
            return Ok((theta[..k].to_vec(), x.columns(0, k).into_owned(), it));
        }
    }
    Err(Error::NoConvergence("block inverse iteration exhausted 1000 sweeps".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::assemble_dirichlet;
    use crate::fracop::FracParams;
    use crate::grid::{make_domain, Grid, Shape};

    #[test]
    fn iterative_and_dense_paths_agree() {
        let g = Grid::centered_1d(2.0, 6).unwrap();
        let mask = make_domain(&g, Shape::interval(-1.0, 1.0)).unwrap();
        let op = assemble_dirichlet(&mask, &FracParams::new(1, 0.5).unwrap()).unwrap();
        let few = eigen_dirichlet(&op, 4).unwrap();
        let many = eigen_dirichlet(&op, 11).unwrap();
        for j in 0..4 {
            assert!((few[j].lambda - many[j].lambda).abs() < 1e-9 * many[j].lambda);
            let d = few[j].vec.sub(&many[j].vec).unwrap().norm_l2();
            assert!(d < 1e-6, "eigenvector {j} differs by {d}");
        }
        for w in many.windows(2) {
            assert!(w[0].lambda <= w[1].lambda);
        }
        assert!((few[0].vec.norm_l2() - 1.0).abs() < 1e-12);
        assert!(few[0].vec.values().iter().all(|&v| v >= -1e-12));
    }
}
