use serde::{Deserialize, Serialize};

use super::{distance, Grid};
use crate::error::{Error, Result};

/// Description of an open set Ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Open interval (a, b); one dimension only.
    Interval { a: f64, b: f64 },
    /// Open axis-aligned rectangle; two dimensions only.
    Rect { lo: [f64; 2], hi: [f64; 2] },
    /// Open ball; `center` has one entry per dimension.
    Ball { center: Vec<f64>, radius: f64 },
    /// Union of analytic parts. Distances are exact for disjoint parts and a
    /// lower bound where parts overlap.
    Union { parts: Vec<Shape> },
    /// Explicit list of inside node indices.
    Nodes { nodes: Vec<usize> },
}

impl Shape {
    pub fn interval(a: f64, b: f64) -> Self {
        Shape::Interval { a, b }
    }

    pub fn ball(center: &[f64], radius: f64) -> Self {
        Shape::Ball { center: center.to_vec(), radius }
    }

    pub fn rect(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Shape::Rect { lo, hi }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Shape::Interval { a, b } => {
                if dim != 1 {
                    return Err(Error::InvalidDomain("interval requires dim 1".into()));
                }
                if !(a < b) {
                    return Err(Error::InvalidDomain(format!("empty interval ({a}, {b})")));
                }
            }
            Shape::Rect { lo, hi } => {
                if dim != 2 {
                    return Err(Error::InvalidDomain("rect requires dim 2".into()));
                }
                if !(lo[0] < hi[0] && lo[1] < hi[1]) {
                    return Err(Error::InvalidDomain(format!("empty rect {lo:?}..{hi:?}")));
                }
            }
            Shape::Ball { center, radius } => {
                if center.len() != dim {
                    return Err(Error::InvalidDomain(format!(
                        "ball center has {} components, grid has dim {dim}",
                        center.len()
                    )));
                }
                if !(*radius > 0.0) {
                    return Err(Error::InvalidDomain(format!("ball radius {radius} must be positive")));
                }
            }
            Shape::Union { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidDomain("empty union".into()));
                }
                for p in parts {
                    if matches!(p, Shape::Nodes { .. }) {
                        return Err(Error::InvalidDomain(
                            "node lists cannot be combined in a union".into(),
                        ));
                    }
                    p.validate(dim)?;
                }
            }
            Shape::Nodes { nodes } => {
                if nodes.is_empty() {
                    return Err(Error::InvalidDomain("empty node list".into()));
                }
            }
        }
        Ok(())
    }

    /// Signed distance to the boundary, positive inside. `None` for node lists.
    pub fn signed_distance(&self, p: [f64; 2]) -> Option<f64> {
        match self {
            Shape::Interval { a, b } => Some((p[0] - a).min(b - p[0])),
            Shape::Ball { center, radius } => {
                let mut c = [0.0; 2];
                c[..center.len()].copy_from_slice(center);
                let mut q = p;
                if center.len() == 1 {
                    q[1] = 0.0;
                }
                Some(radius - distance(q, c))
            }
            Shape::Rect { lo, hi } => {
                let mut outside = 0.0f64;
                let mut inside = f64::NEG_INFINITY;
                for a in 0..2 {
                    let c = 0.5 * (lo[a] + hi[a]);
                    let half = 0.5 * (hi[a] - lo[a]);
                    let q = (p[a] - c).abs() - half;
                    outside += q.max(0.0).powi(2);
                    inside = inside.max(q);
                }
                Some(-(outside.sqrt() + inside.min(0.0)))
            }
            Shape::Union { parts } => parts
                .iter()
                .map(|s| s.signed_distance(p))
                .try_fold(f64::NEG_INFINITY, |acc, d| d.map(|d| acc.max(d))),
            Shape::Nodes { .. } => None,
        }
    }

    /// Bounding box `(lo, hi)` for analytic shapes.
    pub fn bbox(&self, dim: usize) -> Option<([f64; 2], [f64; 2])> {
        match self {
            Shape::Interval { a, b } => Some(([*a, 0.0], [*b, 0.0])),
            Shape::Rect { lo, hi } => Some((*lo, *hi)),
            Shape::Ball { center, radius } => {
                let mut lo = [0.0; 2];
                let mut hi = [0.0; 2];
                for a in 0..dim {
                    lo[a] = center[a] - radius;
                    hi[a] = center[a] + radius;
                }
                Some((lo, hi))
            }
            Shape::Union { parts } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for p in parts {
                    let (l, h) = p.bbox(dim)?;
                    for a in 0..dim {
                        lo[a] = lo[a].min(l[a]);
                        hi[a] = hi[a].max(h[a]);
                    }
                }
                if dim == 1 {
                    lo[1] = 0.0;
                    hi[1] = 0.0;
                }
                Some((lo, hi))
            }
            Shape::Nodes { .. } => None,
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self, Shape::Nodes { .. })
    }
}

/// How the distance field of a mask was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    /// Closed-form distance to the continuous boundary of the shape.
    Analytic,
    /// Distance to the nearest face of an outside node's cell.
    CellFace,
}

/// Indicator of Ω on a grid together with the distance field ρ.
#[derive(Debug, Clone)]
pub struct DomainMask {
    grid: Grid,
    shape: Shape,
    inside: Vec<bool>,
    rho: Vec<f64>,
    kind: DistanceKind,
}

/// Builds the mask of `shape` on `grid`, requiring at least two exterior
/// node layers on every side of the box.
pub fn make_domain(grid: &Grid, shape: Shape) -> Result<DomainMask> {
    shape.validate(grid.dim())?;
    let dim = grid.dim();
    let h = grid.h();
    let n = grid.len();
    let (inside, rho, kind) = match &shape {
        Shape::Nodes { nodes } => {
            let mut inside = vec![false; n];
            for &k in nodes {
                if k >= n {
                    return Err(Error::InvalidDomain(format!("node {k} outside grid of {n}")));
                }
                inside[k] = true;
            }
            let rho = cell_face_distance(grid, &inside);
            (inside, rho, DistanceKind::CellFace)
        }
        _ => {
            let (lo, hi) = shape.bbox(dim).expect("analytic shape");
            let up = grid.upper();
            let tol = 1e-12 * h;
            for a in 0..dim {
                let lo_allowed = grid.origin()[a] + h - tol;
                let hi_allowed = up[a] - h + tol;
                if lo[a] < lo_allowed || hi[a] > hi_allowed {
                    return Err(Error::InvalidDomain(format!(
                        "shape extends to within two node layers of the box on axis {a}"
                    )));
                }
            }
            let mut inside = vec![false; n];
            let mut rho = vec![0.0; n];
            for k in 0..n {
                let d = shape.signed_distance(grid.coord(k)).expect("analytic shape");
                if d > 0.0 {
                    inside[k] = true;
                    rho[k] = d;
                }
            }
            (inside, rho, DistanceKind::Analytic)
        }
    };
    if !inside.iter().any(|&b| b) {
        return Err(Error::InvalidDomain("shape contains no grid node".into()));
    }
    let ext = grid.shape();
    for k in (0..n).filter(|&k| inside[k]) {
        let m = grid.multi(k);
        for a in 0..dim {
            if m[a] < 2 || m[a] + 3 > ext[a] {
                return Err(Error::InvalidDomain(format!(
                    "inside node {k} lies within two layers of the box boundary"
                )));
            }
        }
    }
    Ok(DomainMask { grid: *grid, shape, inside, rho, kind })
}

fn cell_face_distance(grid: &Grid, inside: &[bool]) -> Vec<f64> {
    let n = grid.len();
    let h = grid.h();
    let ext = grid.shape();
    let dim = grid.dim();
    // Outside nodes adjacent (including diagonally) to an inside node; the
    // nearest outside cell is always among them.
    let mut frontier = Vec::new();
    for k in (0..n).filter(|&k| !inside[k]) {
        let [i, j] = grid.multi(k);
        let mut touches = false;
        let jr = if dim == 2 { -1i64..=1 } else { 0..=0 };
        'outer: for dj in jr {
            for di in -1i64..=1 {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii < 0 || jj < 0 || ii >= ext[0] as i64 || jj >= ext[1] as i64 {
                    continue;
                }
                if inside[grid.flat(ii as usize, jj as usize)] {
                    touches = true;
                    break 'outer;
                }
            }
        }
        if touches {
            frontier.push(grid.coord(k));
        }
    }
    let mut rho = vec![0.0; n];
    for k in (0..n).filter(|&k| inside[k]) {
        let x = grid.coord(k);
        let mut best = f64::INFINITY;
        for y in &frontier {
            // distance from x to the closed cell [y - h/2, y + h/2]^dim
            let mut d2 = 0.0;
            for a in 0..dim {
                let gap = ((x[a] - y[a]).abs() - 0.5 * h).max(0.0);
                d2 += gap * gap;
            }
            best = best.min(d2);
        }
        rho[k] = best.sqrt();
    }
    rho
}

impl DomainMask {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn distance_kind(&self) -> DistanceKind {
        self.kind
    }

    #[inline]
    pub fn is_inside(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    /// Distance field ρ; zero outside Ω.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Inside node indices in increasing order.
    pub fn inside_nodes(&self) -> Vec<usize> {
        (0..self.grid.len()).filter(|&k| self.inside[k]).collect()
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// Index box tightly enclosing the inside nodes.
    pub fn support_box(&self) -> super::IndexBox {
        super::IndexBox::enclosing(&self.grid, self.inside_nodes().into_iter())
            .expect("mask is nonempty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(h: f64) -> Grid {
        let n = (4.0 / h).round() as usize + 1;
        Grid::new(1, &[-2.0], h, &[n]).unwrap()
    }

    fn node_at(g: &Grid, x: f64) -> usize {
        ((x - g.origin()[0]) / g.h()).round() as usize
    }

    #[test]
    fn interval_distance() {
        let g = grid1(0.01);
        let m = make_domain(&g, Shape::interval(-1.0, 1.0)).unwrap();
        assert!((m.rho()[node_at(&g, 0.0)] - 1.0).abs() < 1e-12);
        assert!((m.rho()[node_at(&g, 0.9)] - 0.1).abs() < 1e-12);
        assert_eq!(m.rho()[node_at(&g, 1.5)], 0.0);
        // boundary node itself is not inside the open set
        assert!(!m.is_inside(node_at(&g, 1.0)));
        assert_eq!(m.count(), 199);
    }

    #[test]
    fn ball_center_distance() {
        let g = Grid::centered_2d(2.0, 4).unwrap();
        let m = make_domain(&g, Shape::ball(&[0.0, 0.0], 1.0)).unwrap();
        let c = g.flat(32, 32);
        assert_eq!(g.coord(c), [0.0, 0.0]);
        assert!((m.rho()[c] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_union_counts_add() {
        let g = grid1(0.01);
        let a = make_domain(&g, Shape::interval(-1.5, -0.5)).unwrap();
        let b = make_domain(&g, Shape::interval(0.25, 1.25)).unwrap();
        let u = make_domain(
            &g,
            Shape::Union { parts: vec![Shape::interval(-1.5, -0.5), Shape::interval(0.25, 1.25)] },
        )
        .unwrap();
        assert_eq!(u.count(), a.count() + b.count());
    }

    #[test]
    fn rejects_touching_or_empty() {
        let g = grid1(0.25);
        assert!(make_domain(&g, Shape::interval(-1.9, 1.0)).is_err());
        assert!(make_domain(&g, Shape::interval(0.01, 0.02)).is_err());
        assert!(make_domain(&g, Shape::interval(1.0, -1.0)).is_err());
    }

    #[test]
    fn node_list_uses_cell_faces() {
        let g = grid1(0.5);
        let nodes: Vec<usize> = (3..=5).collect();
        let m = make_domain(&g, Shape::Nodes { nodes }).unwrap();
        assert_eq!(m.distance_kind(), DistanceKind::CellFace);
        assert!((m.rho()[3] - 0.25).abs() < 1e-15);
        assert!((m.rho()[4] - 0.75).abs() < 1e-15);
        assert_eq!(m.rho()[2], 0.0);
    }

    #[test]
    fn rect_signed_distance() {
        let r = Shape::rect([-1.0, -0.5], [1.0, 0.5]);
        assert_eq!(r.signed_distance([0.0, 0.0]), Some(0.5));
        assert_eq!(r.signed_distance([2.0, 0.0]), Some(-1.0));
        let corner = r.signed_distance([2.0, 1.5]).unwrap();
        assert!((corner + 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rho_is_one_lipschitz_on_a_disc() {
        let g = Grid::centered_2d(2.0, 3).unwrap();
        let m = make_domain(&g, Shape::ball(&[0.1, -0.2], 1.1)).unwrap();
        let nodes = m.inside_nodes();
        for &a in &nodes {
            for &b in &nodes {
                let d = distance(g.coord(a), g.coord(b));
                assert!((m.rho()[a] - m.rho()[b]).abs() <= d + 1e-12);
            }
        }
    }
}
