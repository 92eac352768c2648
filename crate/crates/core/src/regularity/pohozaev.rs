use serde::Serialize;

use crate::dirichlet::EigenPair;
use crate::error::{Error, Result};
use crate::grid::{DomainMask, GridFunction, Shape};
use crate::special::gamma;

/// How `(u/ρ^s)²` is continued to the boundary from three samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// Quadratic in `h/ρ`, which removes the discrete boundary layer.
    InverseDistance,
    /// Quadratic in ρ.
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PohozaevResidual {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs| / |lhs|`, zero when both sides vanish.
    pub relative: f64,
}

/// Value at 0 of the quadratic through `(t_i, q_i)`.
fn lagrange_at_zero(t: [f64; 3], q: [f64; 3]) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        let mut w = 1.0;
        for j in 0..3 {
            if i != j {
                w *= t[j] / (t[j] - t[i]);
            }
        }
        acc += w * q[i];
    }
    acc
}

fn extrapolate(rho: [f64; 3], q: [f64; 3], h: f64, model: Extrapolation) -> Result<f64> {
    let t = match model {
        Extrapolation::InverseDistance => rho.map(|r| h / r),
        Extrapolation::Polynomial => rho,
    };
    if (0..3).any(|i| (0..i).any(|j| (t[i] - t[j]).abs() < 1e-12 * t[i].abs().max(t[j].abs()))) {
        return Err(Error::Fit("coincident extrapolation nodes".into()));
    }
    let v = lagrange_at_zero(t, q);
    if !v.is_finite() {
        return Err(Error::Fit("boundary extrapolation is not finite".into()));
    }
    Ok(v)
}

/// Both sides of `sλ∫u² = Γ(1+s)²/2 ∫_{∂Ω} (u/ρ^s)² (x·ν)`, the boundary
/// trace extrapolated from the three nearest samples along the inward
/// normal.
pub fn pohozaev_residual(pair: &EigenPair, mask: &DomainMask, s: f64) -> Result<PohozaevResidual> {
    pohozaev_residual_with(pair, mask, s, Extrapolation::InverseDistance)
}

pub fn pohozaev_residual_with(
    pair: &EigenPair,
    mask: &DomainMask,
    s: f64,
    model: Extrapolation,
) -> Result<PohozaevResidual> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidOrder(s));
    }
    let u = &pair.vec;
    let grid = *mask.grid();
    grid.ensure_same(u.grid())?;
    if !(pair.residual <= 1e-8 * pair.lambda.abs().max(1.0)) {
        return Err(Error::InvalidParameter(format!(
            "eigenpair residual {:.3e} is too large for the identity",
            pair.residual
        )));
    }
    let lhs = s * pair.lambda * mask.inside_nodes().iter().map(|&k| u.get(k).powi(2)).sum::<f64>() * grid.cell_volume();
    let trace = if grid.dim() == 1 { boundary_1d(u, mask, s, model)? } else { boundary_2d(u, mask, s, model)? };
    let rhs = 0.5 * gamma(1.0 + s).powi(2) * trace;
    let relative = if lhs == 0.0 && rhs == 0.0 { 0.0 } else { (lhs - rhs).abs() / lhs.abs() };
    Ok(PohozaevResidual { lhs, rhs, relative })
}

fn boundary_1d(u: &GridFunction, mask: &DomainMask, s: f64, model: Extrapolation) -> Result<f64> {
    let (a, b) = match mask.shape() {
        Shape::Interval { a, b } => (*a, *b),
        Shape::Ball { center, radius } => (center[0] - radius, center[0] + radius),
        _ => return Err(Error::InvalidDomain("the identity needs an interval".into())),
    };
    if a > 0.0 || b < 0.0 {
        return Err(Error::InvalidDomain(format!("interval ({a}, {b}) is not star-shaped about the origin")));
    }
    let grid = mask.grid();
    let h = grid.h();
    let inside = mask.inside_nodes();
    if inside.len() < 6 {
        return Err(Error::InvalidDomain("too few inside nodes to extrapolate".into()));
    }
    let ends = [(&inside[..3], a, -1.0), (&inside[inside.len() - 3..], b, 1.0)];
    let mut total = 0.0;
    for (nodes, end, normal) in ends {
        let mut rho = [0.0; 3];
        let mut q = [0.0; 3];
        for (i, &k) in nodes.iter().enumerate() {
            rho[i] = (grid.coord(k)[0] - end).abs();
            q[i] = (u.get(k) / rho[i].powf(s)).powi(2);
        }
        total += extrapolate(rho, q, h, model)? * end * normal;
    }
    Ok(total)
}

/// Bilinear interpolation at a point inside the grid box.
fn bilinear(u: &GridFunction, p: [f64; 2]) -> f64 {
    let g = u.grid();
    let h = g.h();
    let [nx, ny] = g.shape();
    let fx = ((p[0] - g.origin()[0]) / h).clamp(0.0, (nx - 1) as f64);
    let fy = ((p[1] - g.origin()[1]) / h).clamp(0.0, (ny - 1) as f64);
    let i = (fx.floor() as usize).min(nx - 2);
    let j = (fy.floor() as usize).min(ny - 2);
    let (tx, ty) = (fx - i as f64, fy - j as f64);
    let at = |i: usize, j: usize| u.get(g.flat(i, j));
    (1.0 - ty) * ((1.0 - tx) * at(i, j) + tx * at(i + 1, j)) + ty * ((1.0 - tx) * at(i, j + 1) + tx * at(i + 1, j + 1))
}

/// Boundary points with outward normals and arc-length weights.
fn boundary_samples(shape: &Shape, h: f64) -> Result<Vec<([f64; 2], [f64; 2], f64)>> {
    let mut out = Vec::new();
    match shape {
        Shape::Ball { center, radius } => {
            let n = ((2.0 * std::f64::consts::PI * radius / h).ceil() as usize).max(16);
            let ds = 2.0 * std::f64::consts::PI * radius / n as f64;
            for k in 0..n {
                let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
                let nu = [th.cos(), th.sin()];
                out.push(([center[0] + radius * nu[0], center[1] + radius * nu[1]], nu, ds));
            }
        }
        Shape::Rect { lo, hi } => {
            for axis in 0..2 {
                let other = 1 - axis;
                let len = hi[other] - lo[other];
                let n = ((len / h).ceil() as usize).max(8);
                let ds = len / n as f64;
                for (side, sign) in [(lo[axis], -1.0), (hi[axis], 1.0)] {
                    for k in 0..n {
                        let mut x = [0.0; 2];
                        x[axis] = side;
                        x[other] = lo[other] + (k as f64 + 0.5) * ds;
                        let mut nu = [0.0; 2];
                        nu[axis] = sign;
                        out.push((x, nu, ds));
                    }
                }
            }
        }
        _ => return Err(Error::InvalidDomain("the identity needs a disc or rectangle in two dimensions".into())),
    }
    Ok(out)
}

fn boundary_2d(u: &GridFunction, mask: &DomainMask, s: f64, model: Extrapolation) -> Result<f64> {
    let h = mask.grid().h();
    let samples = boundary_samples(mask.shape(), h)?;
    let mut total = 0.0;
    for (x, nu, ds) in samples {
        let xn = x[0] * nu[0] + x[1] * nu[1];
        if xn < -1e-12 {
            return Err(Error::InvalidDomain("x·ν changes sign; the domain is not star-shaped about the origin".into()));
        }
        // two cells in, so the interpolation stencil stays inside Ω
        let mut rho = [0.0; 3];
        let mut q = [0.0; 3];
        for i in 0..3 {
            let d = (i + 2) as f64 * h;
            let p = [x[0] - d * nu[0], x[1] - d * nu[1]];
            rho[i] = d;
            q[i] = (bilinear(u, p) / d.powf(s)).powi(2);
        }
        total += extrapolate(rho, q, h, model)? * xn * ds;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_extrapolation_is_exact() {
        let q = |t: f64| 2.0 - 3.0 * t + 0.5 * t * t;
        let t = [0.1, 0.25, 0.7];
        assert!((lagrange_at_zero(t, t.map(q)) - 2.0).abs() < 1e-13);
    }
}
