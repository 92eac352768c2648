//! Shared inputs for the benchmarks.

use fraclap_core::{make_domain, DomainMask, Grid, GridFunction, Shape};

/// Smooth compactly supported bump on `[-1.5, 1.5]` at `h = 2^-level`.
pub fn bump_1d(level: u32) -> GridFunction {
    let g = Grid::centered_1d(1.5, level).unwrap();
    GridFunction::from_fn(&g, |p| {
        let x = p[0];
        if x.abs() < 1.0 {
            (-1.0 / (1.0 - x * x)).exp()
        } else {
            0.0
        }
    })
    .with_tight_support()
}

/// The interval (−1, 1) inside `[-2, 2]`.
pub fn unit_interval(level: u32) -> DomainMask {
    make_domain(&Grid::centered_1d(2.0, level).unwrap(), Shape::interval(-1.0, 1.0)).unwrap()
}
