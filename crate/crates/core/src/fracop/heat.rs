use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::{require_support, EvalSet, FlDiagnostics, FracParams};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, IndexBox};
use crate::special::heat_tail_integral;

/// Geometric time grid for heat-semigroup time integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatQuadrature {
    t_min: f64,
    t_max: f64,
    ratio: f64,
    alpha: f64,
    n_nodes: usize,
}

impl HeatQuadrature {
    /// Nodes `t_min·ratio^k`; the last node is the first one reaching
    /// `t_max`, so the stored `t_max` may exceed the request by a factor
    /// below `ratio`.
    pub fn new(t_min: f64, t_max: f64, ratio: f64, alpha: f64) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < t_min < t_max, got {t_min}, {t_max}"
            )));
        }
        if !(ratio > 1.0) {
            return Err(Error::InvalidParameter(format!("ratio {ratio} must exceed 1")));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidParameter(format!("alpha {alpha} must lie in (0, 2)")));
        }
        let steps = ((t_max / t_min).ln() / ratio.ln() - 1e-9).ceil().max(1.0) as usize;
        let t_max = t_min * ratio.powi(steps as i32);
        Ok(Self { t_min, t_max, ratio, alpha, n_nodes: steps + 1 })
    }

    /// `t_min = h²/4`, `t_max = 10·diam²`, ratio 1.25, α = 2 − s.
    pub fn default_for(grid: &Grid, s: f64) -> Self {
        let h = grid.h();
        let d = grid.diameter();
        Self::new(h * h / 4.0, 10.0 * d * d, 1.25, 2.0 - s).expect("valid defaults")
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Same ratio with `t_min` halved and `t_max` doubled.
    pub fn widened(&self) -> Self {
        Self::new(self.t_min / 2.0, self.t_max * 2.0, self.ratio, self.alpha).expect("valid")
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidParameter(format!("alpha {alpha} must lie in (0, 2)")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|k| self.t_min * self.ratio.powi(k as i32)).collect()
    }

    /// Trapezoid weights in ln t for ∫_{t_min}^{t_max} F(t) t^{−1−s} dt.
    pub fn weights(&self, s: f64) -> Vec<f64> {
        let dtau = self.ratio.ln();
        let times = self.times();
        let last = times.len() - 1;
        times
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let w = dtau * t.powf(-s);
                if k == 0 || k == last {
                    0.5 * w
                } else {
                    w
                }
            })
            .collect()
    }

    /// α must lie in (2 − 2s, 2) and the first node must resolve h².
    pub fn validate(&self, grid: &Grid, s: f64) -> Result<()> {
        if !(self.alpha > 2.0 - 2.0 * s) {
            return Err(Error::InvalidParameter(format!(
                "alpha {} must exceed 2 - 2s = {}",
                self.alpha,
                2.0 - 2.0 * s
            )));
        }
        let h2 = grid.h() * grid.h();
        if self.t_min > h2 {
            return Err(Error::UnderResolved(format!(
                "t_min = {} exceeds h² = {h2}",
                self.t_min
            )));
        }
        Ok(())
    }
}

/// Σ_{k∈ℤ} exp(−a k²), summed directly for large a and through its theta
/// dual √(π/a) Σ exp(−π² m²/a) otherwise.
fn lattice_gaussian_sum(a: f64) -> f64 {
    if a > PI {
        let mut sum = 1.0;
        for k in 1..64 {
            let term = (-a * (k * k) as f64).exp();
            sum += 2.0 * term;
            if term < 1e-20 {
                break;
            }
        }
        sum
    } else {
        let b = PI * PI / a;
        let mut sum = 1.0;
        for m in 1..64 {
            let term = (-b * (m * m) as f64).exp();
            sum += 2.0 * term;
            if term < 1e-20 {
                break;
            }
        }
        (PI / a).sqrt() * sum
    }
}

/// One-sided sampled heat kernel `g_k`, k = 0..n, normalized so that
/// Σ_{k∈ℤ} g_|k| = 1.
fn line_kernel(h: f64, t: f64, n: usize) -> Vec<f64> {
    let a = h * h / (4.0 * t);
    let z = lattice_gaussian_sum(a);
    let mut g = Vec::with_capacity(n);
    for k in 0..n {
        let v = (-a * (k * k) as f64).exp() / z;
        g.push(v);
        if v == 0.0 {
            break;
        }
    }
    g.resize(n, 0.0);
    g
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Convolution of segments `[lo, lo+m)` of length-n lines with a symmetric
/// kernel truncated where it underflows, producing full length-n lines.
struct LineConvolver {
    n: usize,
    m: usize,
    width: usize,
    kernel: Vec<f64>,
    fft: Option<(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>, Vec<Complex<f64>>)>,
}

impl LineConvolver {
    fn new(kernel: Vec<f64>, m: usize) -> Self {
        let n = kernel.len();
        let width = kernel.iter().rposition(|&v| v != 0.0).unwrap_or(0) + 1;
        let p = (m + 2 * width - 2).next_power_of_two();
        let direct_cost = (m * (2 * width - 1)) as f64;
        let fft_cost = 6.0 * p as f64 * (p as f64).log2();
        let fft = if direct_cost > fft_cost {
            let (fwd, inv) = PLANNER.with(|pl| {
                let mut pl = pl.borrow_mut();
                (pl.plan_fft_forward(p), pl.plan_fft_inverse(p))
            });
            // offsets d ∈ [−(w−1), w−1] stored at q = d + w − 1
            let mut kk = vec![Complex::new(0.0, 0.0); p];
            for (q, slot) in kk.iter_mut().enumerate().take(2 * width - 1) {
                *slot = Complex::new(kernel[q.abs_diff(width - 1)], 0.0);
            }
            fwd.process(&mut kk);
            Some((fwd, inv, kk))
        } else {
            None
        };
        Self { n, m, width, kernel, fft }
    }

    /// Two segments at once; the FFT path packs them as real and imaginary parts.
    fn apply_pair(&self, a: &[f64], b: &[f64], lo: usize, out_a: &mut [f64], out_b: &mut [f64]) {
        let Some((fwd, inv, kk)) = &self.fft else {
            self.apply(a, lo, out_a);
            self.apply(b, lo, out_b);
            return;
        };
        let w = self.width;
        let p = kk.len();
        let mut buf = vec![Complex::new(0.0, 0.0); p];
        for (j, (&x, &y)) in a.iter().zip(b).enumerate() {
            buf[j] = Complex::new(x, y);
        }
        fwd.process(&mut buf);
        for (v, k) in buf.iter_mut().zip(kk) {
            *v *= k;
        }
        inv.process(&mut buf);
        let scale = 1.0 / p as f64;
        out_a.fill(0.0);
        out_b.fill(0.0);
        let lo_i = lo.saturating_sub(w - 1);
        let hi_i = (lo + self.m + w - 1).min(self.n);
        for i in lo_i..hi_i {
            let c = buf[i + w - 1 - lo];
            out_a[i] = c.re * scale;
            out_b[i] = c.im * scale;
        }
    }

    /// `out[i] = Σ_j g(|i − (lo + j)|)·seg[j]`.
    fn apply(&self, seg: &[f64], lo: usize, out: &mut [f64]) {
        debug_assert_eq!(seg.len(), self.m);
        let w = self.width;
        out.fill(0.0);
        match &self.fft {
            None => {
                for (j, &v) in seg.iter().enumerate() {
                    if v == 0.0 {
                        continue;
                    }
                    let c = lo + j;
                    let a = c.saturating_sub(w - 1);
                    let b = (c + w).min(self.n);
                    for (i, o) in out[a..b].iter_mut().enumerate() {
                        *o += self.kernel[(a + i).abs_diff(c)] * v;
                    }
                }
            }
            Some((fwd, inv, kk)) => {
                let p = kk.len();
                let mut buf = vec![Complex::new(0.0, 0.0); p];
                for (j, &v) in seg.iter().enumerate() {
                    buf[j] = Complex::new(v, 0.0);
                }
                fwd.process(&mut buf);
                for (b, k) in buf.iter_mut().zip(kk) {
                    *b *= k;
                }
                inv.process(&mut buf);
                let scale = 1.0 / p as f64;
                let a = lo.saturating_sub(w - 1);
                let b = (lo + self.m + w - 1).min(self.n);
                for (i, o) in out[a..b].iter_mut().enumerate() {
                    *o = buf[a + i + w - 1 - lo].re * scale;
                }
            }
        }
    }
}

/// `G(·, t) ∗ u` on the box nodes, with the heat kernel sampled on the
/// lattice and normalized to unit mass over ℤ^N.
///
/// Exact on the box since u vanishes outside it; mass carried beyond the box
/// is dropped, and the result is declared supported on the whole box.
pub fn heat_convolve(u: &GridFunction, t: f64) -> Result<GridFunction> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time {t} must be nonnegative")));
    }
    let support = require_support(u)?;
    if t == 0.0 {
        return Ok(u.clone());
    }
    let grid = *u.grid();
    let values = convolve_box(&grid, u.values(), support, t);
    GridFunction::new(&grid, values)?.with_support(IndexBox::full(&grid))
}

pub(crate) fn convolve_box(grid: &Grid, values: &[f64], support: IndexBox, t: f64) -> Vec<f64> {
    let [nx, ny] = grid.shape();
    let h = grid.h();
    let (xlo, xhi) = (support.lo[0], support.hi[0]);
    let mx = xhi - xlo + 1;
    let conv_x = LineConvolver::new(line_kernel(h, t, nx), mx);
    let mut out = vec![0.0; nx * ny];
    if grid.dim() == 1 {
        conv_x.apply(&values[xlo..=xhi], xlo, &mut out);
        return out;
    }
    let (ylo, yhi) = (support.lo[1], support.hi[1]);
    let my = yhi - ylo + 1;
    // rows inside the support band, then every column
    let mut rows = vec![0.0; nx * my];
    rows.par_chunks_mut(nx).enumerate().for_each(|(r, row)| {
        let j = ylo + r;
        conv_x.apply(&values[j * nx + xlo..=j * nx + xhi], xlo, row);
    });
    let conv_y = LineConvolver::new(line_kernel(h, t, ny), my);
    let cols: Vec<Vec<f64>> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let seg: Vec<f64> = (0..my).map(|r| rows[r * nx + i]).collect();
            let mut col = vec![0.0; ny];
            conv_y.apply(&seg, ylo, &mut col);
            col
        })
        .collect();
    for (i, col) in cols.iter().enumerate() {
        for (j, v) in col.iter().enumerate() {
            out[j * nx + i] = *v;
        }
    }
    out
}

/// [`convolve_box`] of two functions sharing a support box.
pub(crate) fn convolve_box_pair(
    grid: &Grid,
    a: &[f64],
    b: &[f64],
    support: IndexBox,
    t: f64,
) -> (Vec<f64>, Vec<f64>) {
    if grid.dim() == 2 {
        return (convolve_box(grid, a, support, t), convolve_box(grid, b, support, t));
    }
    let n = grid.len();
    let (lo, hi) = (support.lo[0], support.hi[0]);
    let conv = LineConvolver::new(line_kernel(grid.h(), t, n), hi - lo + 1);
    let (mut oa, mut ob) = (vec![0.0; n], vec![0.0; n]);
    conv.apply_pair(&a[lo..=hi], &b[lo..=hi], lo, &mut oa, &mut ob);
    (oa, ob)
}

/// (−Δ)^s u by the heat semigroup at interior nodes; zero on the box boundary.
pub fn apply_fl_semigroup(u: &GridFunction, params: &FracParams, quad: &HeatQuadrature) -> Result<GridFunction> {
    Ok(apply_fl_semigroup_with(u, params, quad)?.0)
}

/// `(1/Γ(−s)) [ Δ_h u·t_min^{1−s}/(1−s) + Σ_k w_k (G(t_k)∗u − u)
///   − u·t_max^{−s}/s + M·∫_{t_max}^∞ G(x − x̄, t) t^{−1−s} dt ]`
/// with M and x̄ the mass and centroid of u.
pub fn apply_fl_semigroup_with(
    u: &GridFunction,
    params: &FracParams,
    quad: &HeatQuadrature,
) -> Result<(GridFunction, FlDiagnostics)> {
    let grid = *u.grid();
    params.check_grid(&grid)?;
    let support = require_support(u)?;
    let s = params.s();
    quad.validate(&grid, s)?;
    let nodes = EvalSet::Interior.resolve(&grid)?;
    let vals = u.values();
    let n = grid.len();

    let times = quad.times();
    let weights = quad.weights(s);
    let mut acc = vec![0.0; n];
    for (t, w) in times.iter().zip(&weights) {
        let g = convolve_box(&grid, vals, support, *t);
        for k in 0..n {
            acc[k] += w * (g[k] - vals[k]);
        }
    }

    let mass = u.integral();
    let centroid = if mass != 0.0 {
        let mut c = [0.0; 2];
        for (k, v) in vals.iter().enumerate() {
            let p = grid.coord(k);
            c[0] += p[0] * v;
            c[1] += p[1] * v;
        }
        let vol = grid.cell_volume();
        [c[0] * vol / mass, c[1] * vol / mass]
    } else {
        [0.0; 2]
    };
    let gneg = params.gamma_neg();
    let (t_min, t_max) = (quad.t_min(), quad.t_max());
    let mut out = vec![0.0; n];
    let mut diag = FlDiagnostics {
        route: "semigroup".into(),
        quadrature_nodes: times.len(),
        eval_nodes: nodes.len(),
        ..Default::default()
    };
    for &k in &nodes {
        let small = grid.laplacian_at(vals, k) * t_min.powf(1.0 - s) / (1.0 - s);
        let r = crate::grid::distance(grid.coord(k), centroid);
        let large = -vals[k] * t_max.powf(-s) / s + mass * heat_tail_integral(grid.dim(), s, r, t_max);
        out[k] = (small + acc[k] + large) / gneg;
        diag.correction_max = diag.correction_max.max((small / gneg).abs());
        diag.tail_max = diag.tail_max.max((large / gneg).abs());
    }
    Ok((GridFunction::new(&grid, out)?, diag))
}
