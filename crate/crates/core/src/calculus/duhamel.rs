use std::collections::HashMap;
use std::rc::Rc;

use serde::Serialize;

use super::check_cutoff_resolution;
use crate::error::{Error, Result};
use crate::fracop::heat::{convolve_box, convolve_box_pair};
use crate::fracop::{require_support, FracParams, HeatQuadrature};
use crate::grid::{CutoffPair, Grid, GridFunction, IndexBox};
use crate::special::heat_tail_integral;

const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Snapshot of the heat evolutions at time `t`: φ = G(t)∗u and the
/// commutator evolution `z = z1 − z2` with
/// `z1 = ∫ G(t−τ)∗2div(φ∇η) dτ`, `z2 = ∫ G(t−τ)∗(φΔη) dτ`.
#[derive(Debug, Clone)]
pub struct DuhamelState {
    pub t: f64,
    pub phi: GridFunction,
    pub z: GridFunction,
    pub z1: GridFunction,
    pub z2: GridFunction,
}

/// Discrete derivatives of η used by the source terms.
struct CutoffStencil {
    grid: Grid,
    grad: Vec<[f64; 2]>,
    lap: Vec<f64>,
    /// Box where ∇η or Δη may be nonzero.
    inner: IndexBox,
    /// `inner` grown by one node, the support of div(φ∇η).
    outer: IndexBox,
}

fn grow(b: IndexBox, grid: &Grid, by: usize) -> Option<IndexBox> {
    let mut out = b;
    for a in 0..grid.dim() {
        if b.lo[a] < by + 1 || b.hi[a] + by + 1 >= grid.extent()[a] {
            return None;
        }
        out.lo[a] -= by;
        out.hi[a] += by;
    }
    Some(out)
}

impl CutoffStencil {
    fn new(cut: &CutoffPair) -> Result<Option<Self>> {
        if cut.is_constant() {
            return Ok(None);
        }
        let eta = cut.eta();
        let grid = *eta.grid();
        check_cutoff_resolution(cut, &grid)?;
        let supp = require_support(eta)?;
        let (inner, outer) = match grow(supp, &grid, 1).zip(grow(supp, &grid, 2)) {
            Some(p) => p,
            None => {
                return Err(Error::InvalidCutoff(
                    "cut-off support must stay three nodes inside the box".into(),
                ))
            }
        };
        let n = grid.len();
        let mut grad = vec![[0.0; 2]; n];
        let mut lap = vec![0.0; n];
        for k in inner.nodes(&grid) {
            grad[k] = grid.gradient_at(eta.values(), k);
            lap[k] = grid.laplacian_at(eta.values(), k);
        }
        Ok(Some(Self { grid, grad, lap, inner, outer }))
    }

    /// `(2div(φ∇η), φΔη)` with centered stencils.
    fn sources(&self, phi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let n = g.len();
        let nx = g.extent()[0];
        let inv = 1.0 / g.h();
        let mut s1 = vec![0.0; n];
        let mut s2 = vec![0.0; n];
        for k in self.inner.nodes(g) {
            s2[k] = phi[k] * self.lap[k];
        }
        for k in self.outer.nodes(g) {
            let mut d = phi[k + 1] * self.grad[k + 1][0] - phi[k - 1] * self.grad[k - 1][0];
            if g.dim() == 2 {
                d += phi[k + nx] * self.grad[k + nx][1] - phi[k - nx] * self.grad[k - nx][1];
            }
            s1[k] = d * inv;
        }
        (s1, s2)
    }
}

/// Gauss–Legendre nodes on [0, t], graded by octaves toward both ends
/// down to the lattice time h²/4, each octave split into `n_sub` panels.
fn tau_nodes(t: f64, h: f64, n_sub: usize) -> Vec<(f64, f64)> {
    let e = h * h / 4.0;
    let mid = 0.5 * t;
    let mut left = vec![0.0];
    let mut b = e;
    while b < mid {
        left.push(b);
        b *= 2.0;
    }
    left.push(mid);
    let mut breaks = left.clone();
    for &x in left.iter().rev().skip(1) {
        breaks.push(t - x);
    }
    let mut out = Vec::with_capacity(breaks.len() * n_sub * 4);
    for w in breaks.windows(2) {
        let step = (w[1] - w[0]) / n_sub as f64;
        for p in 0..n_sub {
            let a = w[0] + step * p as f64;
            let half = 0.5 * step;
            for (x, wt) in GL4 {
                out.push((a + half * (1.0 + x), half * wt));
            }
        }
    }
    out
}

/// Commutator evolution at time `t` by Duhamel quadrature.
pub fn duhamel_z(u: &GridFunction, cut: &CutoffPair, t: f64, n_sub: usize) -> Result<DuhamelState> {
    Ok(duhamel_path(u, cut, &[t], n_sub)?.pop().expect("one time"))
}

/// [`duhamel_z`] at several times, sharing the cut-off stencil.
pub fn duhamel_path(u: &GridFunction, cut: &CutoffPair, times: &[f64], n_sub: usize) -> Result<Vec<DuhamelState>> {
    if n_sub < 2 {
        return Err(Error::InvalidParameter(format!("n_sub = {n_sub} must be at least 2")));
    }
    if let Some(&t) = times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter(format!("time {t} must be nonnegative")));
    }
    let grid = *u.grid();
    grid.ensure_same(cut.eta().grid())?;
    let support = require_support(u)?;
    let stencil = CutoffStencil::new(cut)?;
    let full = IndexBox::full(&grid);
    let mk = |v: Vec<f64>| -> Result<GridFunction> { GridFunction::new(&grid, v)?.with_support(full) };
    // octave panels toward τ = 0 coincide across times, so their sources are reused
    let cache_limit = 1usize << 26;
    let mut cache: HashMap<u64, Rc<(Vec<f64>, Vec<f64>)>> = HashMap::new();
    times
        .iter()
        .map(|&t| {
            let n = grid.len();
            let phi = if t == 0.0 { u.values().to_vec() } else { convolve_box(&grid, u.values(), support, t) };
            let (mut z1, mut z2) = (vec![0.0; n], vec![0.0; n]);
            if let (Some(st), true) = (&stencil, t > 0.0) {
                for (tau, w) in tau_nodes(t, grid.h(), n_sub) {
                    let src = match cache.get(&tau.to_bits()) {
                        Some(v) => v.clone(),
                        None => {
                            let ph = convolve_box(&grid, u.values(), support, tau);
                            let v = Rc::new(st.sources(&ph));
                            if tau < 0.5 * t && 2 * n * (cache.len() + 1) <= cache_limit {
                                cache.insert(tau.to_bits(), v.clone());
                            }
                            v
                        }
                    };
                    let (a, b) = convolve_box_pair(&grid, &src.0, &src.1, st.outer, t - tau);
                    for k in 0..n {
                        z1[k] += w * a[k];
                        z2[k] += w * b[k];
                    }
                }
            }
            let z: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| a - b).collect();
            Ok(DuhamelState { t, phi: mk(phi)?, z: mk(z)?, z1: mk(z1)?, z2: mk(z2)? })
        })
        .collect()
}

/// Diagnostics of the heat-route commutator. The four partial sums split
/// the time integral at t = 1 and the source into its two terms; norms are
/// discrete L².
#[derive(Debug, Clone, Serialize)]
pub struct HeatCommutatorReport {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub small_time_correction: f64,
    pub large_time_correction: f64,
    /// Bound on the part of A₂² beyond t_max from the decay rate α.
    pub a22_tail_bound: f64,
    /// Growth exponent of ‖z(t)‖ fitted on the first two nodes.
    pub fitted_exponent: f64,
    /// The small-time exponent (1+s)/2 that bounds the fit from below.
    pub reference_exponent: f64,
    pub quadrature_nodes: usize,
    pub n_sub: usize,
}

impl HeatCommutatorReport {
    pub fn to_json(&self) -> Result<String> {
        crate::json::to_sorted_string(self)
    }
}

pub fn commutator_g_heat(
    u: &GridFunction,
    cut: &CutoffPair,
    params: &FracParams,
    quad: &HeatQuadrature,
) -> Result<(GridFunction, HeatCommutatorReport)> {
    commutator_g_heat_with(u, cut, params, quad, 2)
}

fn mass_centroid(f: &[f64], grid: &Grid) -> (f64, [f64; 2]) {
    let vol = grid.cell_volume();
    let mass: f64 = f.iter().sum::<f64>() * vol;
    if mass == 0.0 {
        return (0.0, [0.0; 2]);
    }
    let mut c = [0.0; 2];
    for (k, v) in f.iter().enumerate() {
        let p = grid.coord(k);
        c[0] += p[0] * v;
        c[1] += p[1] * v;
    }
    (mass, [c[0] * vol / mass, c[1] * vol / mass])
}

/// `g = (1/Γ(−s)) ∫₀^∞ z(t) t^{−1−s} dt` with z from [`duhamel_path`] on the
/// nodes of `quad`, `z ≈ z(t_min)(t/t_min)^β` below t_min and the Gaussian
/// far field `M_{ηu}G(x−x̄₁,t) − η(x)M_u G(x−x̄₂,t)` beyond t_max.
pub fn commutator_g_heat_with(
    u: &GridFunction,
    cut: &CutoffPair,
    params: &FracParams,
    quad: &HeatQuadrature,
    n_sub: usize,
) -> Result<(GridFunction, HeatCommutatorReport)> {
    let grid = *u.grid();
    params.check_grid(&grid)?;
    let s = params.s();
    quad.validate(&grid, s)?;
    let times = quad.times();
    let weights = quad.weights(s);
    let path = duhamel_path(u, cut, &times, n_sub)?;
    let n = grid.len();
    let inv_g = 1.0 / params.gamma_neg();

    let mut parts = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for ((st, &w), &t) in path.iter().zip(&weights).zip(&times) {
        let (i1, i2) = if t <= 1.0 { (0, 1) } else { (2, 3) };
        let (lo, hi) = parts.split_at_mut(i2);
        for (k, (a, b)) in lo[i1].iter_mut().zip(hi[0].iter_mut()).enumerate() {
            *a += inv_g * w * st.z1.get(k);
            *b -= inv_g * w * st.z2.get(k);
        }
    }

    let reference_exponent = 0.5 * (1.0 + s);
    let (z0, z1n) = (path[0].z.norm_l2(), path[1].z.norm_l2());
    let fitted = if z0 > 0.0 && z1n > 0.0 { (z1n / z0).ln() / quad.ratio().ln() } else { 1.0 };
    let beta = fitted.clamp(reference_exponent, 1.0);
    let t_min = quad.t_min();
    let c_small = inv_g * t_min.powf(-s) / (beta - s);
    let mut small = vec![0.0; n];
    for k in 0..n {
        let (a, b) = (path[0].z1.get(k), path[0].z2.get(k));
        parts[0][k] += c_small * a;
        parts[1][k] -= c_small * b;
        small[k] = c_small * (a - b);
    }

    let t_max = quad.t_max();
    let eta = cut.eta().values();
    let eu: Vec<f64> = eta.iter().zip(u.values()).map(|(a, b)| a * b).collect();
    let (m1, c1) = mass_centroid(&eu, &grid);
    let (m2, c2) = mass_centroid(u.values(), &grid);
    let mut large = vec![0.0; n];
    for (k, l) in large.iter_mut().enumerate() {
        let p = grid.coord(k);
        let r1 = crate::grid::distance(p, c1);
        let r2 = crate::grid::distance(p, c2);
        *l = inv_g
            * (m1 * heat_tail_integral(grid.dim(), s, r1, t_max)
                - eta[k] * m2 * heat_tail_integral(grid.dim(), s, r2, t_max));
    }

    let g: Vec<f64> = (0..n).map(|k| parts[0][k] + parts[1][k] + parts[2][k] + parts[3][k] + large[k]).collect();
    let vol = grid.cell_volume();
    let l2 = |v: &[f64]| crate::grid::lp_norm(v, 2.0, vol);
    let g_norm = l2(&g);
    let small_norm = l2(&small);
    if small_norm > 0.25 * g_norm && g_norm > 0.0 {
        return Err(Error::UnderResolved(format!(
            "small-time correction {small_norm:.3e} dominates the commutator {g_norm:.3e}; lower t_min"
        )));
    }
    let alpha = quad.alpha();
    let last = path.last().expect("nonempty grid");
    let report = HeatCommutatorReport {
        a11: l2(&parts[0]),
        a12: l2(&parts[1]),
        a21: l2(&parts[2]),
        a22: l2(&parts[3]),
        small_time_correction: small_norm,
        large_time_correction: l2(&large),
        a22_tail_bound: inv_g.abs() * last.z2.norm_l2() * t_max.powf(-s) / (s + 0.5 * alpha - 1.0),
        fitted_exponent: fitted,
        reference_exponent,
        quadrature_nodes: times.len(),
        n_sub,
    };
    Ok((GridFunction::new(&grid, g)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_nodes_integrate_polynomials() {
        for &t in &[1e-6, 0.3, 40.0] {
            let nodes = tau_nodes(t, 1.0 / 512.0, 2);
            let len: f64 = nodes.iter().map(|p| p.1).sum();
            let cubic: f64 = nodes.iter().map(|p| p.1 * p.0.powi(3)).sum();
            assert!((len - t).abs() < 1e-13 * t);
            assert!((cubic - t.powi(4) / 4.0).abs() < 1e-12 * t.powi(4));
            assert!(nodes.iter().all(|p| p.0 > 0.0 && p.0 < t));
        }
    }
}
