use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::kernel::rect_exterior_2d;
use super::{require_support, FlDiagnostics, FracParams};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::special::hurwitz_zeta;

/// Zero-pads to `pad_factor` times the box per axis and applies |ξ|^{2s} on
/// the periodic extension, evaluated on every box node.
pub fn apply_fl_multiplier(u: &GridFunction, s: f64, pad_factor: usize) -> Result<GridFunction> {
    Ok(apply_fl_multiplier_with(u, s, pad_factor, true)?.0)
}

/// As [`apply_fl_multiplier`]. The periodic operator differs from the
/// whole-space one by the interaction with the periodic images of u, of
/// size O(‖u‖₁·d^{−N−2s}) for image distance d; with `image_correction`
/// the monopole part of that interaction is added back, leaving an
/// O(‖u‖₁ R² d^{−N−2s−2}) remainder for support radius R. The reported
/// `tail_max` is the bound on what remains.
pub fn apply_fl_multiplier_with(
    u: &GridFunction,
    s: f64,
    pad_factor: usize,
    image_correction: bool,
) -> Result<(GridFunction, FlDiagnostics)> {
    let grid = *u.grid();
    let (period, mut diag) = multiplier_on_period(u, s, pad_factor, image_correction)?;
    let mx = period.grid().shape()[0];
    let out = (0..grid.len())
        .map(|k| {
            let [i, j] = grid.multi(k);
            period.get(j * mx + i)
        })
        .collect();
    diag.eval_nodes = grid.len();
    Ok((GridFunction::new(&grid, out)?, diag))
}

/// The multiplier evaluated on the whole padded period, returned on a grid
/// with the same origin and spacing and `pad_factor` times the extent.
pub(crate) fn multiplier_on_period(
    u: &GridFunction,
    s: f64,
    pad_factor: usize,
    image_correction: bool,
) -> Result<(GridFunction, FlDiagnostics)> {
    let grid = *u.grid();
    let params = FracParams::new(grid.dim(), s)?;
    let support = require_support(u)?;
    if pad_factor < 2 {
        return Err(Error::InvalidParameter(format!("pad_factor {pad_factor} must be at least 2")));
    }
    let h = grid.h();
    let [nx, ny] = grid.shape();
    let dim = grid.dim();
    let period = [
        (pad_factor * nx) as f64 * h,
        if dim == 2 { (pad_factor * ny) as f64 * h } else { f64::INFINITY },
    ];
    // nearest image of the support seen from any box node
    let box_width = [(nx - 1) as f64 * h, (ny - 1) as f64 * h];
    let supp_width = [
        (support.hi[0] - support.lo[0]) as f64 * h,
        (support.hi[1] - support.lo[1]) as f64 * h,
    ];
    let mut d_img = f64::INFINITY;
    for a in 0..dim {
        let d = period[a] - box_width[a];
        if d < supp_width[a] {
            return Err(Error::InvalidParameter(format!(
                "periodic images at distance {d} are closer than the support width {}",
                supp_width[a]
            )));
        }
        d_img = d_img.min(d);
    }

    let mx = pad_factor * nx;
    let my = if dim == 2 { pad_factor * ny } else { 1 };
    let mut buf = vec![Complex::new(0.0, 0.0); mx * my];
    for k in 0..grid.len() {
        let [i, j] = grid.multi(k);
        buf[j * mx + i] = Complex::new(u.get(k), 0.0);
    }
    let mut planner = FftPlanner::new();
    fft_2d(&mut planner, &mut buf, mx, my, false);
    let fx = 2.0 * PI / (mx as f64 * h);
    let fy = 2.0 * PI / (my as f64 * h);
    for j in 0..my {
        let ky = if j <= my / 2 { j as f64 } else { j as f64 - my as f64 };
        for i in 0..mx {
            let kx = if i <= mx / 2 { i as f64 } else { i as f64 - mx as f64 };
            let xi2 = (kx * fx).powi(2) + if dim == 2 { (ky * fy).powi(2) } else { 0.0 };
            buf[j * mx + i] *= if xi2 == 0.0 { 0.0 } else { xi2.powf(s) };
        }
    }
    fft_2d(&mut planner, &mut buf, mx, my, true);
    let scale = 1.0 / (mx * my) as f64;
    let ext: Vec<usize> = if dim == 2 { vec![mx, my] } else { vec![mx] };
    let pgrid = Grid::new(dim, grid.origin(), h, &ext)?;
    let mut out: Vec<f64> = buf.iter().map(|c| c.re * scale).collect();

    let c = params.c_ns();
    let l1 = u.norm_lp(1.0);
    let e = dim as f64 + 2.0 * s;
    // the number of nearest images is 2N; the image lattice sum is bounded
    // by a constant multiple of the nearest term
    let uncorrected = c * l1 * 2.0 * dim as f64 * d_img.powf(-e) * 2.0;
    let mut tail_max = uncorrected;
    if image_correction {
        let mass = u.integral();
        // cancelling mass can push the centroid arbitrarily far away
        let (lo, hi) = (grid.coord(grid.flat(support.lo[0], support.lo[1])), grid.coord(grid.flat(support.hi[0], support.hi[1])));
        let c0 = centroid(&grid, u.values(), mass);
        let centroid = [c0[0].clamp(lo[0], hi[0]), c0[1].clamp(lo[1], hi[1])];
        let mut radius = 0.0f64;
        for k in support.nodes(&grid) {
            if u.get(k) != 0.0 {
                radius = radius.max(crate::grid::distance(grid.coord(k), centroid));
            }
        }
        for (k, o) in out.iter_mut().enumerate() {
            let p = pgrid.coord(k);
            let a = [p[0] - centroid[0], p[1] - centroid[1]];
            *o += c * mass * image_sum(dim, s, a, period);
        }
        tail_max = c * l1 * radius * radius * e * (e + 2.0) * 2.0 * dim as f64 * d_img.powf(-e - 2.0) * 2.0;
    }
    let diag = FlDiagnostics {
        route: "multiplier".into(),
        tail_max,
        correction_max: 0.0,
        quadrature_nodes: mx * my,
        eval_nodes: pgrid.len(),
    };
    Ok((GridFunction::new(&pgrid, out)?, diag))
}

fn centroid(grid: &Grid, vals: &[f64], mass: f64) -> [f64; 2] {
    if mass == 0.0 {
        let (lo, hi) = grid.cell_box();
        return [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    }
    let mut c = [0.0; 2];
    for (k, v) in vals.iter().enumerate() {
        let p = grid.coord(k);
        c[0] += p[0] * v;
        c[1] += p[1] * v;
    }
    let vol = grid.cell_volume();
    [c[0] * vol / mass, c[1] * vol / mass]
}

/// Σ_{j ≠ 0} |a + j∘L|^{−N−2s} over the image lattice.
fn image_sum(dim: usize, s: f64, a: [f64; 2], period: [f64; 2]) -> f64 {
    if dim == 1 {
        let l = period[0];
        let e = 1.0 + 2.0 * s;
        return l.powf(-e) * (hurwitz_zeta(e, 1.0 + a[0] / l) + hurwitz_zeta(e, 1.0 - a[0] / l));
    }
    const J: i64 = 8;
    let e = 2.0 + 2.0 * s;
    let mut sum = 0.0;
    for j2 in -J..=J {
        for j1 in -J..=J {
            if j1 == 0 && j2 == 0 {
                continue;
            }
            let x = a[0] + j1 as f64 * period[0];
            let y = a[1] + j2 as f64 * period[1];
            sum += (x * x + y * y).powf(-0.5 * e);
        }
    }
    // images beyond the block, as an integral with density 1/(Lx Ly)
    let half = [(J as f64 + 0.5) * period[0], (J as f64 + 0.5) * period[1]];
    sum + rect_exterior_2d(s, [-a[0], -a[1]], [-half[0], -half[1]], half) / (period[0] * period[1])
}

pub(crate) fn fft_2d(planner: &mut FftPlanner<f64>, buf: &mut [Complex<f64>], mx: usize, my: usize, inverse: bool) {
    let fx = if inverse { planner.plan_fft_inverse(mx) } else { planner.plan_fft_forward(mx) };
    for row in buf.chunks_mut(mx) {
        fx.process(row);
    }
    if my > 1 {
        let fy = if inverse { planner.plan_fft_inverse(my) } else { planner.plan_fft_forward(my) };
        let mut col = vec![Complex::new(0.0, 0.0); my];
        for i in 0..mx {
            for j in 0..my {
                col[j] = buf[j * mx + i];
            }
            fy.process(&mut col);
            for j in 0..my {
                buf[j * mx + i] = col[j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_sum_matches_direct_lattice_sum() {
        let (s, l, a) = (0.3, 5.0, 1.2);
        let direct: f64 = (1..200_000)
            .map(|j| {
                let j = j as f64;
                (a + j * l).abs().powf(-1.6) + (a - j * l).abs().powf(-1.6)
            })
            .sum();
        // remaining tail ≈ 2∫_{J}^{∞} (jL)^{-1.6} dj
        let tail = 2.0 * (200_000.0 * l).powf(-0.6) / (0.6 * l);
        let got = image_sum(1, s, [a, 0.0], [l, f64::INFINITY]);
        assert!((got - direct - tail).abs() / got < 1e-9);
    }

    #[test]
    fn zero_input_and_padding_checks() {
        let g = Grid::new(1, &[-1.0], 1.0 / 32.0, &[65]).unwrap();
        let u = GridFunction::zeros(&g).with_tight_support();
        assert_eq!(apply_fl_multiplier(&u, 0.5, 2).unwrap().max_abs(), 0.0);
        assert!(apply_fl_multiplier(&u, 0.5, 1).is_err());
    }
}
