use super::{distance, DomainMask, GridFunction, IndexBox, Shape};
use crate::error::{Error, Result};

/// C^∞ step from 0 at `u ≤ -1` to 1 at `u ≥ 1`; its derivative is a
/// compactly supported bump of unit mass, so `smooth_step(d / r)` is the
/// indicator of a half-line mollified at radius `r`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= -1.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let a = f(0.5 * (1.0 + u));
    let b = f(0.5 * (1.0 - u));
    a / (a + b)
}

/// Smooth cut-off η with η = 1 on ω̃ and η = 0 outside ω, ω̃ ⋐ ω ⋐ Ω.
#[derive(Debug, Clone)]
pub struct CutoffPair {
    eta: GridFunction,
    omega_tilde: Vec<usize>,
    omega: Vec<usize>,
    moll_radius: f64,
    inner: Option<Shape>,
    outer: Option<Shape>,
}

/// Gap between the boundaries of two nested convex shapes, `dist(inner, ∂outer)`.
/// Negative when `inner` is not contained in `outer`.
fn nested_gap(inner: &Shape, outer: &Shape) -> Result<f64> {
    use Shape::*;
    let as_interval = |s: &Shape| match s {
        Ball { center, radius } if center.len() == 1 => Interval {
            a: center[0] - radius,
            b: center[0] + radius,
        },
        other => other.clone(),
    };
    let (inner, outer) = (as_interval(inner), as_interval(outer));
    let pad = |v: &[f64]| {
        let mut c = [0.0; 2];
        c[..v.len()].copy_from_slice(v);
        c
    };
    let gap = match (&inner, &outer) {
        (Interval { a: a1, b: b1 }, Interval { a: a2, b: b2 }) => (a1 - a2).min(b2 - b1),
        (Ball { center: c1, radius: r1 }, Ball { center: c2, radius: r2 }) => {
            r2 - r1 - distance(pad(c1), pad(c2))
        }
        (Rect { lo: l1, hi: h1 }, Rect { lo: l2, hi: h2 }) => (0..2)
            .map(|a| (l1[a] - l2[a]).min(h2[a] - h1[a]))
            .fold(f64::INFINITY, f64::min),
        (Ball { center, radius }, Rect { lo, hi }) => (0..2)
            .map(|a| (center[a] - radius - lo[a]).min(hi[a] - center[a] - radius))
            .fold(f64::INFINITY, f64::min),
        (Rect { lo, hi }, Ball { center, radius }) => {
            let c = pad(center);
            let far = [[lo[0], lo[1]], [lo[0], hi[1]], [hi[0], lo[1]], [hi[0], hi[1]]]
                .iter()
                .map(|&p| distance(p, c))
                .fold(0.0, f64::max);
            radius - far
        }
        _ => {
            return Err(Error::InvalidCutoff(
                "cut-off sets must be intervals, rectangles or balls".into(),
            ))
        }
    };
    Ok(gap)
}

/// Builds η as the indicator of ω̃ dilated by half the gap to ∂ω, mollified
/// over a transition band of total width `moll_radius`.
pub fn build_cutoff(
    mask: &DomainMask,
    omega_tilde: Shape,
    omega: Shape,
    moll_radius: f64,
) -> Result<CutoffPair> {
    let grid = *mask.grid();
    let h = grid.h();
    if !(moll_radius >= 2.0 * h) {
        return Err(Error::InvalidCutoff(format!(
            "mollification band {moll_radius} is below 2h = {} and unresolved",
            2.0 * h
        )));
    }
    let gap = nested_gap(&omega_tilde, &omega)?;
    if gap < moll_radius {
        return Err(Error::InvalidCutoff(format!(
            "separation {gap} between inner and outer sets is below the band {moll_radius}"
        )));
    }
    let n = grid.len();
    let mut omega_nodes = Vec::new();
    let mut inner_nodes = Vec::new();
    for k in 0..n {
        let p = grid.coord(k);
        let d_outer = omega.signed_distance(p).expect("analytic");
        if d_outer > 0.0 {
            if !mask.is_inside(k) {
                return Err(Error::InvalidCutoff(format!(
                    "outer set reaches node {k}, which is outside the domain"
                )));
            }
            omega_nodes.push(k);
        }
        if omega_tilde.signed_distance(p).expect("analytic") > 0.0 {
            inner_nodes.push(k);
        }
    }
    if omega_nodes.is_empty() {
        return Err(Error::InvalidCutoff("outer set contains no grid node".into()));
    }
    // dist(ω, ∂Ω) > 0: the closure of ω must stay inside Ω. Shapes outside
    // the nested-gap family were already checked node by node.
    if let Ok(margin) = nested_gap(&omega, mask.shape()) {
        if margin <= 0.0 {
            return Err(Error::InvalidCutoff("outer set touches the domain boundary".into()));
        }
    }
    let half_band = 0.5 * moll_radius;
    let dilation = 0.5 * gap;
    let values: Vec<f64> = (0..n)
        .map(|k| {
            let d = omega_tilde.signed_distance(grid.coord(k)).expect("analytic") + dilation;
            smooth_step(d / half_band)
        })
        .collect();
    let support = IndexBox::enclosing(&grid, (0..n).filter(|&k| values[k] > 0.0))
        .unwrap_or_else(|| IndexBox::full(&grid));
    let eta = GridFunction::new(&grid, values)?.with_support(support)?;
    Ok(CutoffPair {
        eta,
        omega_tilde: inner_nodes,
        omega: omega_nodes,
        moll_radius,
        inner: Some(omega_tilde),
        outer: Some(omega),
    })
}

impl CutoffPair {
    /// Degenerate cut-off η ≡ 1 on the whole box, for testing identities.
    pub fn constant(grid: &super::Grid) -> Self {
        let eta = GridFunction::from_fn(grid, |_| 1.0)
            .with_support(IndexBox::full(grid))
            .expect("full support");
        let all: Vec<usize> = (0..grid.len()).collect();
        Self {
            eta,
            omega_tilde: all.clone(),
            omega: all,
            moll_radius: 0.0,
            inner: None,
            outer: None,
        }
    }

    pub fn eta(&self) -> &GridFunction {
        &self.eta
    }

    /// Nodes of the inner set ω̃.
    pub fn omega_tilde(&self) -> &[usize] {
        &self.omega_tilde
    }

    /// Nodes of the outer set ω.
    pub fn omega(&self) -> &[usize] {
        &self.omega
    }

    pub fn moll_radius(&self) -> f64 {
        self.moll_radius
    }

    pub fn is_constant(&self) -> bool {
        self.inner.is_none()
    }

    pub fn inner_shape(&self) -> Option<&Shape> {
        self.inner.as_ref()
    }

    pub fn outer_shape(&self) -> Option<&Shape> {
        self.outer.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_domain, Grid};

    fn setup(level: u32) -> DomainMask {
        let g = Grid::centered_1d(2.0, level).unwrap();
        make_domain(&g, Shape::interval(-1.0, 1.0)).unwrap()
    }

    fn value_at(c: &CutoffPair, x: f64) -> f64 {
        let g = c.eta().grid();
        let k = ((x - g.origin()[0]) / g.h()).round() as usize;
        c.eta().get(k)
    }

    #[test]
    fn plateau_support_and_band() {
        let mask = setup(7);
        let c = build_cutoff(&mask, Shape::interval(-0.25, 0.25), Shape::interval(-0.75, 0.75), 0.2)
            .unwrap();
        assert_eq!(value_at(&c, 0.0), 1.0);
        assert_eq!(value_at(&c, 0.9), 0.0);
        let mid = value_at(&c, 0.5);
        assert!(mid > 0.0 && mid < 1.0);
        for &k in c.omega_tilde() {
            assert_eq!(c.eta().get(k), 1.0);
        }
        for k in 0..mask.grid().len() {
            let v = c.eta().get(k);
            assert!((0.0..=1.0).contains(&v));
            if !c.omega().contains(&k) {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn rejects_thin_gaps_and_unresolved_bands() {
        let mask = setup(5);
        let inner = Shape::interval(-0.25, 0.25);
        assert!(build_cutoff(&mask, inner.clone(), Shape::interval(-0.3, 0.3), 0.2).is_err());
        assert!(build_cutoff(&mask, inner.clone(), Shape::interval(-0.75, 0.75), 0.04).is_err());
        assert!(build_cutoff(&mask, inner, Shape::interval(-1.2, 0.75), 0.2).is_err());
    }

    #[test]
    fn halving_the_band_doubles_the_slope() {
        // max |Δη|/h approximates max S'(u)/(band/2); S' is evaluated by a
        // fine central difference of the step itself.
        let mask = setup(12);
        let h = mask.grid().h();
        let peak = |band: f64| {
            let c = build_cutoff(&mask, Shape::interval(-0.25, 0.25), Shape::interval(-0.75, 0.75), band)
                .unwrap();
            c.eta().values().windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max) / h
        };
        let du = 1e-6;
        let s_prime_max = (0..=2000)
            .map(|i| {
                let u = -1.0 + i as f64 * 1e-3;
                (smooth_step(u + du) - smooth_step(u - du)) / (2.0 * du)
            })
            .fold(0.0, f64::max);
        let (r1, r2) = (0.2, 0.1);
        let (p1, p2) = (peak(r1), peak(r2));
        assert!((p1 - s_prime_max / (r1 / 2.0)).abs() / p1 < 0.01);
        assert!((p2 / p1 - 2.0).abs() < 0.02);
    }

    #[test]
    fn disc_cutoff_in_two_dimensions() {
        let g = Grid::centered_2d(2.0, 4).unwrap();
        let mask = make_domain(&g, Shape::ball(&[0.0, 0.0], 1.0)).unwrap();
        let c = build_cutoff(&mask, Shape::ball(&[0.0, 0.0], 0.3), Shape::ball(&[0.0, 0.0], 0.8), 0.25)
            .unwrap();
        for &k in c.omega_tilde() {
            assert_eq!(c.eta().get(k), 1.0);
        }
        assert!(c.eta().max_abs() <= 1.0);
    }
}
