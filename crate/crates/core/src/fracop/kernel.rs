//! Lattice weights of |x−y|^{−N−2s}, their box row sums and the analytic
//! tail outside the grid box.

use crate::grid::Grid;
use crate::special::gauss_legendre;

/// Offset table `|d|^{−N−e}` for the lattice offsets of a grid, with prefix
/// sums so that Σ_{y in box, y≠x} of the weights is O(1) per node.
#[derive(Debug, Clone)]
pub struct LatticeKernel {
    grid: Grid,
    exponent: f64,
    scale: f64,
    // table[di + dj*nx] = |(di, dj)|^{-exponent}, table[0] = 0
    table: Vec<f64>,
    // prefix[a + b*nx] = Σ_{di ≤ a, dj ≤ b} table
    prefix: Vec<f64>,
}

impl LatticeKernel {
    /// Weights `h^N / |x−y|^{N+2s} = h^{−2s}·|d|^{−N−2s}` for the grid.
    pub fn new(grid: &Grid, s: f64) -> Self {
        Self::with_exponent(grid, grid.dim() as f64 + 2.0 * s, grid.h().powf(-2.0 * s))
    }

    /// Table of `scale·|d|^{−exponent}` for general homogeneous kernels.
    pub fn with_exponent(grid: &Grid, exponent: f64, scale: f64) -> Self {
        let [nx, ny] = grid.shape();
        let mut table = vec![0.0; nx * ny];
        for dj in 0..ny {
            for di in 0..nx {
                if di == 0 && dj == 0 {
                    continue;
                }
                let r2 = (di * di + dj * dj) as f64;
                table[di + dj * nx] = r2.powf(-0.5 * exponent);
            }
        }
        let mut prefix = vec![0.0; nx * ny];
        for dj in 0..ny {
            let mut row = 0.0;
            for di in 0..nx {
                row += table[di + dj * nx];
                let below = if dj > 0 { prefix[di + (dj - 1) * nx] } else { 0.0 };
                prefix[di + dj * nx] = row + below;
            }
        }
        Self { grid: *grid, exponent, scale, table, prefix }
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Weight between two nodes given by their flat indices.
    #[inline]
    pub fn weight(&self, x: usize, y: usize) -> f64 {
        let nx = self.grid.shape()[0];
        let (xi, xj) = (x % nx, x / nx);
        let (yi, yj) = (y % nx, y / nx);
        self.scale * self.table[xi.abs_diff(yi) + xj.abs_diff(yj) * nx]
    }

    /// Weight for an absolute offset `(|di|, |dj|)`.
    #[inline]
    pub fn weight_offset(&self, di: usize, dj: usize) -> f64 {
        self.scale * self.table[di + dj * self.grid.shape()[0]]
    }

    #[inline]
    fn q(&self, a: usize, b: usize) -> f64 {
        self.prefix[a + b * self.grid.shape()[0]]
    }

    /// Σ over box nodes y ≠ x of the weight.
    pub fn box_row_sum(&self, x: usize) -> f64 {
        let [nx, ny] = self.grid.shape();
        let [i, j] = self.grid.multi(x);
        let (a, b) = (nx - 1 - i, ny - 1 - j);
        // four closed quadrants, minus the doubly counted axis lines
        let quads = self.q(a, b) + self.q(i, b) + self.q(a, j) + self.q(i, j);
        let lines = self.q(a, 0) + self.q(i, 0) + self.col(b) + self.col(j);
        self.scale * (quads - lines)
    }

    fn col(&self, b: usize) -> f64 {
        // Σ_{dj ≤ b} table[0, dj]
        let nx = self.grid.shape()[0];
        let mut acc = 0.0;
        for dj in 0..=b {
            acc += self.table[dj * nx];
        }
        acc
    }
}

/// ∫ over ℝ^N minus the cell box of |x−y|^{−N−2s} dy, for a node x.
pub fn exterior_tail(grid: &Grid, s: f64, x: [f64; 2]) -> f64 {
    let (lo, hi) = grid.cell_box();
    if grid.dim() == 1 {
        ((x[0] - lo[0]).powf(-2.0 * s) + (hi[0] - x[0]).powf(-2.0 * s)) / (2.0 * s)
    } else {
        rect_exterior_2d(s, x, lo, hi)
    }
}

/// ∫ over the exterior of the rectangle [lo, hi] of |x−y|^{−2−2s} dy for x
/// inside it. In polar coordinates about x this is (1/2s)∫ R(θ)^{−2s} dθ; on
/// the edge at distance d with foot-point offset t = d·sinh(w) the angular
/// integral becomes d^{−2s} ∫ cosh(w)^{−1−2s} dw.
pub(crate) fn rect_exterior_2d(s: f64, x: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> f64 {
    let edges = [
        (x[0] - lo[0], lo[1] - x[1], hi[1] - x[1]),
        (hi[0] - x[0], lo[1] - x[1], hi[1] - x[1]),
        (x[1] - lo[1], lo[0] - x[0], hi[0] - x[0]),
        (hi[1] - x[1], lo[0] - x[0], hi[0] - x[0]),
    ];
    let mut total = 0.0;
    for (d, t1, t2) in edges {
        let w1 = (t1 / d).asinh();
        let w2 = (t2 / d).asinh();
        total += d.powf(-2.0 * s) * cosh_power_integral(-1.0 - 2.0 * s, w1, w2);
    }
    total / (2.0 * s)
}

/// ∫_{a}^{b} cosh(w)^{p} dw by 8-point Gauss–Legendre panels of width ≤ 1/2.
fn cosh_power_integral(p: f64, a: f64, b: f64) -> f64 {
    thread_local! {
        static GL8: (Vec<f64>, Vec<f64>) = gauss_legendre(8);
    }
    GL8.with(|(xs, ws)| {
        let panels = ((b - a) / 0.5).ceil().max(1.0) as usize;
        let width = (b - a) / panels as f64;
        let mut acc = 0.0;
        for k in 0..panels {
            let mid = a + (k as f64 + 0.5) * width;
            let half = 0.5 * width;
            for (x, w) in xs.iter().zip(ws) {
                acc += w * half * (mid + half * x).cosh().powf(p);
            }
        }
        acc
    })
}
