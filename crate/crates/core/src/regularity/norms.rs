use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fracop::kernel::{exterior_tail, rect_exterior_2d, LatticeKernel};
use crate::fracop::multiplier::{fft_2d, multiplier_on_period};
use crate::fracop::apply_fl_integral;
use crate::fracop::{EvalSet, FracParams};
use crate::grid::{lp_norm, Grid, GridFunction, IndexBox};
use crate::special::lattice_defect;

/// Node pairs entering a Gagliardo seminorm.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    /// Whole space, with u extended by zero; needs a declared support.
    Whole,
    /// Pairs of box nodes only.
    Box,
    /// Pairs inside a node set.
    Nodes(&'a [usize]),
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent p = {p} must be finite and at least 1")));
    }
    Ok(())
}

#[inline]
fn pow_abs(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else {
        x.abs().powf(p)
    }
}

/// Missing near-diagonal mass of `Σ_{y≠0} ω(y) h^N |y|^{−N−qσ}` when
/// `ω(y) ≈ |y|^{kq}·M` for a k-th order difference; `None` where the
/// lattice moment is not isotropic.
fn diagonal_defect(dim: usize, k: u32, sigma: f64, q: f64, h: f64, moment: f64) -> Option<f64> {
    let kq = k as f64 * q;
    match (dim, k) {
        (1, _) => Some(moment * h.powf(kq - q * sigma) * lattice_defect(1, kq - 1.0 - q * sigma)),
        (2, 1) if q == 2.0 => Some(0.5 * moment * h.powf(2.0 - 2.0 * sigma) * lattice_defect(2, -2.0 * sigma)),
        _ => None,
    }
}

/// Centered gradient magnitude powers `Σ |Du|^p` (1D) or `Σ |∇u|²` (2D,
/// p = 2) over the interior nodes accepted by `keep`.
fn gradient_moment(u: &GridFunction, p: f64, keep: impl Fn(usize) -> bool) -> f64 {
    let g = u.grid();
    let vol = g.cell_volume();
    let mut acc = 0.0;
    for k in 0..g.len() {
        if g.on_box_boundary(k) || !keep(k) {
            continue;
        }
        let d = g.gradient_at(u.values(), k);
        acc += if g.dim() == 1 { pow_abs(d[0], p) } else { d[0] * d[0] + d[1] * d[1] };
    }
    acc * vol
}

/// `(ΣΣ |u(x)−u(y)|^p h^{2N}/|x−y|^{N+σp})^{1/p}` over the region pairs,
/// plus the analytic exterior for [`Region::Whole`] and a lattice
/// correction for the excluded diagonal.
pub fn gagliardo_seminorm(u: &GridFunction, sigma: f64, p: f64, region: Region<'_>) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter(format!("order {sigma} must lie in (0, 1)")));
    }
    check_p(p)?;
    let grid = *u.grid();
    let n_dim = grid.dim() as f64;
    let vol = grid.cell_volume();
    let kernel = LatticeKernel::with_exponent(&grid, n_dim + sigma * p, grid.h().powf(-sigma * p));
    let v = u.values();
    let pair_sum = |nodes: &[usize]| -> (Vec<f64>, Vec<f64>) {
        let mut inner = vec![0.0; nodes.len()];
        let mut wsum = vec![0.0; nodes.len()];
        for (a, &x) in nodes.iter().enumerate() {
            let (mut acc, mut ws) = (0.0, 0.0);
            for &y in nodes {
                if y == x {
                    continue;
                }
                let w = kernel.weight(x, y);
                acc += pow_abs(v[x] - v[y], p) * w;
                ws += w;
            }
            inner[a] = acc;
            wsum[a] = ws;
        }
        (inner, wsum)
    };
    let (mut total, keep): (f64, Box<dyn Fn(usize) -> bool>) = match region {
        Region::Whole => {
            let supp = u.support().ok_or(Error::MissingSupport)?;
            let nodes = supp.nodes(&grid);
            let (inner, wsum) = pair_sum(&nodes);
            let mut acc = 0.0;
            for (a, &x) in nodes.iter().enumerate() {
                let outside = kernel.box_row_sum(x) - wsum[a] + exterior_tail(&grid, 0.5 * sigma * p, grid.coord(x));
                acc += inner[a] + 2.0 * pow_abs(v[x], p) * outside;
            }
            (acc, Box::new(|_| true))
        }
        Region::Box => {
            let nodes: Vec<usize> = (0..grid.len()).collect();
            (pair_sum(&nodes).0.iter().sum(), Box::new(|_| true))
        }
        Region::Nodes(set) => {
            let mut member = vec![false; grid.len()];
            for &k in set {
                if k >= grid.len() {
                    return Err(Error::InvalidParameter(format!("node {k} outside the grid")));
                }
                member[k] = true;
            }
            let total = pair_sum(set).0.iter().sum();
            let keep = move |k: usize| member[k] && grid.neighbours(k).all(|nb| member[nb]);
            (total, Box::new(keep))
        }
    };
    total *= vol;
    let moment = gradient_moment(u, p, keep);
    if let Some(d) = diagonal_defect(grid.dim(), 1, sigma, p, grid.h(), moment) {
        total += d;
    }
    Ok(total.max(0.0).powf(1.0 / p))
}

/// Which difference built a Besov value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferenceOrder {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BesovValue {
    /// `(Σ_y ‖Δ_y u‖_p^q h^N/|y|^{N+qσ})^{1/q}`.
    pub seminorm: f64,
    pub lp_norm: f64,
    pub order: DifferenceOrder,
    /// Whether the near-diagonal lattice correction was available.
    pub lattice_corrected: bool,
    /// Whether shifts cover the whole space (supported u) or half the box.
    pub whole_space: bool,
}

impl BesovValue {
    pub fn norm(&self) -> f64 {
        self.lp_norm + self.seminorm
    }
}

/// Translation moduli `‖Δ_y u‖_p^p` and `‖Δ²_y u‖_p^p` over lattice shifts.
#[derive(Debug, Clone)]
pub(crate) struct Moduli {
    dim: usize,
    h: f64,
    p: f64,
    /// Shifts in a closed half-space, lattice units.
    shifts: Vec<[i64; 2]>,
    first: Vec<f64>,
    second: Vec<f64>,
    /// Half-widths of the shift rectangle beyond which supports separate.
    reach: Option<[i64; 2]>,
    lp_p: f64,
    grad_moment: f64,
    hess_moment: f64,
}

fn half_space(d: [i64; 2]) -> bool {
    d[1] > 0 || (d[1] == 0 && d[0] > 0)
}

impl Moduli {
    pub(crate) fn new(u: &GridFunction, p: f64) -> Result<Self> {
        check_p(p)?;
        let grid = *u.grid();
        let dim = grid.dim();
        let vol = grid.cell_volume();
        let lp_p = u.values().iter().map(|v| pow_abs(*v, p)).sum::<f64>() * vol;
        let grad_moment = gradient_moment(u, p, |_| true);
        let hess_moment = if dim == 1 {
            (0..grid.len())
                .filter(|&k| !grid.on_box_boundary(k))
                .map(|k| pow_abs(grid.laplacian_at(u.values(), k), p))
                .sum::<f64>()
                * vol
        } else {
            0.0
        };
        let base = Self {
            dim,
            h: grid.h(),
            p,
            shifts: Vec::new(),
            first: Vec::new(),
            second: Vec::new(),
            reach: None,
            lp_p,
            grad_moment,
            hess_moment,
        };
        match u.support() {
            Some(s) if dim == 2 && p == 2.0 => Ok(base.whole_by_correlation(u, s)),
            Some(s) => Ok(base.whole_direct(u, s)),
            None => Ok(base.box_direct(u)),
        }
    }

    fn whole_direct(mut self, u: &GridFunction, s: IndexBox) -> Self {
        let grid = u.grid();
        let nx = grid.shape()[0];
        let (lo, hi) = (
            [s.lo[0] as i64, s.lo[1] as i64],
            [s.hi[0] as i64, s.hi[1] as i64],
        );
        let w = [hi[0] - lo[0], hi[1] - lo[1]];
        let vals = u.values();
        let get = |i: i64, j: i64| -> f64 {
            if i < lo[0] || i > hi[0] || j < lo[1] || j > hi[1] {
                0.0
            } else {
                vals[j as usize * nx + i as usize]
            }
        };
        let vol = grid.cell_volume();
        let p = self.p;
        for dj in -w[1]..=w[1] {
            for di in -w[0]..=w[0] {
                let d = [di, dj];
                if !half_space(d) {
                    continue;
                }
                let (mut a1, mut a2) = (0.0, 0.0);
                for j in lo[1] - dj.abs()..=hi[1] + dj.abs() {
                    for i in lo[0] - di.abs()..=hi[0] + di.abs() {
                        let c = get(i, j);
                        let f = get(i + di, j + dj);
                        let b = get(i - di, j - dj);
                        a1 += pow_abs(f - c, p);
                        a2 += pow_abs(f - 2.0 * c + b, p);
                    }
                }
                self.shifts.push(d);
                self.first.push(a1 * vol);
                self.second.push(a2 * vol);
            }
        }
        self.reach = Some(w);
        self
    }

    fn whole_by_correlation(mut self, u: &GridFunction, s: IndexBox) -> Self {
        let grid = u.grid();
        let nx = grid.shape()[0];
        let w = [(s.hi[0] - s.lo[0]) as i64, (s.hi[1] - s.lo[1]) as i64];
        let mx = (2 * w[0] as usize + 2).next_power_of_two();
        let my = (2 * w[1] as usize + 2).next_power_of_two();
        let mut buf = vec![Complex::new(0.0, 0.0); mx * my];
        for j in s.lo[1]..=s.hi[1] {
            for i in s.lo[0]..=s.hi[0] {
                buf[(j - s.lo[1]) * mx + (i - s.lo[0])] = Complex::new(u.get(j * nx + i), 0.0);
            }
        }
        let mut planner = FftPlanner::new();
        fft_2d(&mut planner, &mut buf, mx, my, false);
        for c in buf.iter_mut() {
            *c = Complex::new(c.norm_sqr(), 0.0);
        }
        fft_2d(&mut planner, &mut buf, mx, my, true);
        let vol = grid.cell_volume();
        let scale = vol / (mx * my) as f64;
        let corr = |d: [i64; 2]| -> f64 {
            if d[0].abs() > w[0] || d[1].abs() > w[1] {
                return 0.0;
            }
            let i = d[0].rem_euclid(mx as i64) as usize;
            let j = d[1].rem_euclid(my as i64) as usize;
            buf[j * mx + i].re * scale
        };
        let a0 = corr([0, 0]);
        for dj in -w[1]..=w[1] {
            for di in -w[0]..=w[0] {
                let d = [di, dj];
                if !half_space(d) {
                    continue;
                }
                let a1 = corr(d);
                let a2 = corr([2 * di, 2 * dj]);
                self.shifts.push(d);
                self.first.push((2.0 * a0 - 2.0 * a1).max(0.0));
                self.second.push((6.0 * a0 - 8.0 * a1 + 2.0 * a2).max(0.0));
            }
        }
        self.reach = Some(w);
        self
    }

    fn box_direct(mut self, u: &GridFunction) -> Self {
        let grid = u.grid();
        let [nx, ny] = grid.shape();
        let (nx, ny) = (nx as i64, ny as i64);
        let half = [(nx - 1) / 2, (ny - 1) / 2];
        let vals = u.values();
        let at = |i: i64, j: i64| vals[(j * nx + i) as usize];
        let vol = grid.cell_volume();
        let p = self.p;
        for dj in -half[1]..=half[1] {
            for di in -half[0]..=half[0] {
                let d = [di, dj];
                if !half_space(d) {
                    continue;
                }
                let (mut a1, mut a2) = (0.0, 0.0);
                for j in 0..ny {
                    for i in 0..nx {
                        let (fi, fj, bi, bj) = (i + di, j + dj, i - di, j - dj);
                        let fwd = fi >= 0 && fi < nx && fj >= 0 && fj < ny;
                        let bwd = bi >= 0 && bi < nx && bj >= 0 && bj < ny;
                        if fwd {
                            a1 += pow_abs(at(fi, fj) - at(i, j), p);
                        }
                        if fwd && bwd {
                            a2 += pow_abs(at(fi, fj) - 2.0 * at(i, j) + at(bi, bj), p);
                        }
                    }
                }
                self.shifts.push(d);
                self.first.push(a1 * vol);
                self.second.push(a2 * vol);
            }
        }
        self
    }

    pub(crate) fn whole_space(&self) -> bool {
        self.reach.is_some()
    }

    pub(crate) fn lp_norm(&self) -> f64 {
        self.lp_p.powf(1.0 / self.p)
    }

    /// Besov seminorm of order σ with outer exponent q.
    pub(crate) fn besov(&self, sigma: f64, q: f64) -> BesovValue {
        let order = if sigma < 1.0 { DifferenceOrder::First } else { DifferenceOrder::Second };
        let (moduli, k, moment, far) = match order {
            DifferenceOrder::First => (&self.first, 1, self.grad_moment, 2.0 * self.lp_p),
            DifferenceOrder::Second => {
                (&self.second, 2, self.hess_moment, (2.0 + 2f64.powf(self.p)) * self.lp_p)
            }
        };
        let n = self.dim as f64;
        let h = self.h;
        let e = n + q * sigma;
        let mut acc = 0.0;
        for (d, m) in self.shifts.iter().zip(moduli) {
            let r = ((d[0] * d[0] + d[1] * d[1]) as f64).sqrt() * h;
            acc += 2.0 * m.powf(q / self.p) * h.powi(self.dim as i32) * r.powf(-e);
        }
        if let Some(w) = self.reach {
            let lo = [-(w[0] as f64 + 0.5) * h, -(w[1] as f64 + 0.5) * h];
            let tail = if self.dim == 1 {
                2.0 * (-lo[0]).powf(-q * sigma) / (q * sigma)
            } else {
                rect_exterior_2d(0.5 * q * sigma, [0.0, 0.0], lo, [-lo[0], -lo[1]])
            };
            acc += far.powf(q / self.p) * tail;
        }
        let m = if self.dim == 1 { moment.powf(q / self.p) } else { moment };
        let defect = if self.dim == 2 && self.p != q {
            None
        } else {
            diagonal_defect(self.dim, k, sigma, q, h, m)
        };
        if let Some(dd) = defect {
            acc += dd;
        }
        BesovValue {
            seminorm: acc.max(0.0).powf(1.0 / q),
            lp_norm: self.lp_norm(),
            order,
            lattice_corrected: defect.is_some(),
            whole_space: self.whole_space(),
        }
    }
}

/// Besov seminorm `(Σ_y ‖Δ_y u‖_p^q h^N / |y|^{N+qσ})^{1/q}`: first
/// differences for σ < 1 and second differences `u(x+y) − 2u(x) + u(x−y)`
/// for σ ∈ [1, 2). A supported u is extended by zero and every shift is
/// summed; otherwise differences stay inside the box and shifts reach half
/// of it. The L^p part of the norm is in [`besov_norm_with`].
pub fn besov_norm(u: &GridFunction, sigma: f64, p: f64, q: f64) -> Result<f64> {
    Ok(besov_norm_with(u, sigma, p, q)?.seminorm)
}

pub fn besov_norm_with(u: &GridFunction, sigma: f64, p: f64, q: f64) -> Result<BesovValue> {
    if !(sigma > 0.0 && sigma < 2.0) {
        return Err(Error::InvalidParameter(format!("order {sigma} must lie in (0, 2)")));
    }
    check_p(q)?;
    Ok(Moduli::new(u, p)?.besov(sigma, q))
}

/// Route used for (−Δ)^s in [`potential_norm_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialRoute {
    Multiplier { image_correction: bool },
    Integral,
}

/// `‖u‖_p + ‖(−Δ)^s u‖_p` with both norms over a box `pad` times larger
/// than the grid box.
pub fn potential_norm(u: &GridFunction, s: f64, p: f64) -> Result<f64> {
    potential_norm_with(u, s, p, 4, PotentialRoute::Multiplier { image_correction: true })
}

pub fn potential_norm_with(u: &GridFunction, s: f64, p: f64, pad: usize, route: PotentialRoute) -> Result<f64> {
    check_p(p)?;
    let grid = *u.grid();
    let lp = u.norm_lp(p);
    let fl = match route {
        PotentialRoute::Multiplier { image_correction } => multiplier_on_period(u, s, pad, image_correction)?.0,
        PotentialRoute::Integral => {
            let support = u.support().ok_or(Error::MissingSupport)?;
            // same padded box as the multiplier, one extra layer so its nodes are interior
            let [nx, ny] = grid.shape();
            let ext: Vec<usize> = if grid.dim() == 2 { vec![pad * nx + 2, pad * ny + 2] } else { vec![pad * nx + 2] };
            let origin: Vec<f64> = grid.origin().iter().map(|o| o - grid.h()).collect();
            let big = Grid::new(grid.dim(), &origin, grid.h(), &ext)?;
            let bx = ext[0];
            let mut vals = vec![0.0; big.len()];
            for k in 0..grid.len() {
                let [i, j] = grid.multi(k);
                let jj = if grid.dim() == 2 { j + 1 } else { 0 };
                vals[jj * bx + i + 1] = u.get(k);
            }
            let lo = [support.lo[0] + 1, if grid.dim() == 2 { support.lo[1] + 1 } else { 0 }];
            let hi = [support.hi[0] + 1, if grid.dim() == 2 { support.hi[1] + 1 } else { 0 }];
            let v = GridFunction::new(&big, vals)?.with_support(IndexBox { lo, hi })?;
            let out = apply_fl_integral(&v, &FracParams::new(grid.dim(), s)?, &EvalSet::Interior)?;
            let inner: Vec<f64> = (0..big.len())
                .filter(|&k| !big.on_box_boundary(k))
                .map(|k| out.get(k))
                .collect();
            return Ok(lp + lp_norm(&inner, p, grid.cell_volume()));
        }
    };
    Ok(lp + fl.norm_lp(p))
}
