use fraclap_core::fracop::{
    apply_fl_integral, apply_fl_integral_with, apply_fl_multiplier, apply_fl_semigroup,
    heat_convolve, EvalSet, FracParams, HeatQuadrature, IntegralOptions,
};
use fraclap_core::{Grid, GridFunction};

fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

fn rel_l2_on(a: &GridFunction, b: &GridFunction, keep: impl Fn([f64; 2]) -> bool) -> f64 {
    let g = a.grid();
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..g.len() {
        if keep(g.coord(k)) {
            num += (a.get(k) - b.get(k)).powi(2);
            den += b.get(k).powi(2);
        }
    }
    (num / den).sqrt()
}

fn getoor(level: u32) -> GridFunction {
    let g = Grid::centered_1d(2.0, level).unwrap();
    GridFunction::from_fn(&g, |x| (1.0 - x[0] * x[0]).max(0.0).sqrt()).with_tight_support()
}

#[test]
fn half_laplacian_of_semicircle_is_one() {
    let u = getoor(10);
    let p = FracParams::new(1, 0.5).unwrap();
    let out = apply_fl_integral(&u, &p, &EvalSet::Interior).unwrap();
    let one = GridFunction::from_fn(u.grid(), |_| 1.0);
    let err = rel_l2_on(&out, &one, |x| x[0].abs() < 0.5);
    assert!(err < 5e-3, "relative error {err}");
}

#[test]
fn gaussian_at_origin_matches_quadrature() {
    // 2C∫(1 − e^{−y²}) y^{−1−2s} dy for s = 1/4 (mpmath adaptive quadrature)
    let oracle = 0.977_741_067_446_921_6;
    let g = Grid::centered_1d(6.0, 9).unwrap();
    let u = GridFunction::from_fn(&g, |x| (-x[0] * x[0]).exp()).with_tight_support();
    let p = FracParams::new(1, 0.25).unwrap();
    let centre = (g.len() - 1) / 2;
    let out = apply_fl_integral(&u, &p, &EvalSet::Nodes(vec![centre])).unwrap();
    let rel = (out.get(centre) - oracle).abs() / oracle;
    assert!(rel < 1e-3, "relative error {rel}");
}

#[test]
fn integral_route_is_linear_and_symmetric() {
    let g = Grid::centered_1d(2.0, 7).unwrap();
    let p = FracParams::new(1, 0.3).unwrap();
    let u = GridFunction::from_fn(&g, |x| bump(x[0])).with_tight_support();
    let v = GridFunction::from_fn(&g, |x| bump(1.5 * x[0] - 0.2) * x[0]).with_tight_support();
    let au = apply_fl_integral(&u, &p, &EvalSet::Interior).unwrap();
    let av = apply_fl_integral(&v, &p, &EvalSet::Interior).unwrap();
    let comb = u.scale(2.0).add(&v.scale(-3.0)).unwrap();
    let ac = apply_fl_integral(&comb, &p, &EvalSet::Interior).unwrap();
    for k in 0..g.len() {
        let lin = 2.0 * au.get(k) - 3.0 * av.get(k);
        assert!((ac.get(k) - lin).abs() < 1e-12 * (1.0 + lin.abs()));
    }
    let (uv, vu) = (av.dot(&u).unwrap(), au.dot(&v).unwrap());
    assert!((uv - vu).abs() < 1e-12 * uv.abs().max(1e-300));
}

#[test]
fn translation_and_scaling() {
    let p = FracParams::new(1, 0.5).unwrap();
    let g = Grid::centered_1d(3.0, 8).unwrap();
    let h = g.h();
    let u = GridFunction::from_fn(&g, |x| bump(x[0])).with_tight_support();
    let shifted = GridFunction::from_fn(&g, |x| bump(x[0] - h)).with_tight_support();
    let a = apply_fl_integral(&u, &p, &EvalSet::Interior).unwrap();
    let b = apply_fl_integral(&shifted, &p, &EvalSet::Interior).unwrap();
    let centre = (g.len() - 1) / 2;
    for k in centre - 200..centre + 200 {
        assert!((b.get(k + 1) - a.get(k)).abs() < 1e-6);
    }
    // u(λx) on a grid with spacing h/λ: values λ^{2s}·apply(u)(λx)
    let lambda = 2.0;
    let g2 = Grid::centered_1d(1.5, 9).unwrap();
    let ul = GridFunction::from_fn(&g2, |x| bump(lambda * x[0])).with_tight_support();
    let c = apply_fl_integral(&ul, &p, &EvalSet::Interior).unwrap();
    for k in 1..g2.len() - 1 {
        let x = g2.coord(k)[0];
        let j = ((lambda * x - g.origin()[0]) / h).round() as usize;
        let expected = lambda.powf(2.0 * p.s()) * a.get(j);
        assert!((c.get(k) - expected).abs() < 1e-3 * a.max_abs(), "x = {x}");
    }
}

#[test]
fn heat_convolution_identities() {
    let g = Grid::centered_1d(16.0, 6).unwrap();
    let sigma2: f64 = 0.25;
    let u = GridFunction::from_fn(&g, |x| (-x[0] * x[0] / (2.0 * sigma2)).exp()).with_tight_support();
    assert_eq!(heat_convolve(&u, 0.0).unwrap(), u);
    assert!(heat_convolve(&u, -1.0).is_err());
    let m0 = u.integral();
    for t in [1e-4, 0.01, 0.3, 1.5] {
        let w = heat_convolve(&u, t).unwrap();
        assert!((w.integral() - m0).abs() < 1e-12 * m0, "t = {t}: {} vs {m0}", w.integral());
        // variance σ² + 2t: peak (σ²/(σ²+2t))^{1/2}, second moment σ²+2t
        let var = sigma2 + 2.0 * t;
        let centre = (g.len() - 1) / 2;
        assert!((w.get(centre) - (sigma2 / var).sqrt()).abs() < 1e-6);
        let m2: f64 = (0..g.len()).map(|k| g.coord(k)[0].powi(2) * w.get(k)).sum::<f64>() * g.h() / m0;
        assert!((m2 - var).abs() < 1e-6 * var);
    }
}

#[test]
fn heat_convolution_in_two_dimensions_preserves_mass() {
    let g = Grid::centered_2d(6.0, 4).unwrap();
    let u = GridFunction::from_fn(&g, |x| bump(x[0]) * bump(0.7 * x[1] + 0.1)).with_tight_support();
    for t in [1e-3, 0.05, 0.2] {
        let w = heat_convolve(&u, t).unwrap();
        assert!((w.integral() - u.integral()).abs() < 1e-12 * u.integral(), "t = {t}: {} vs {}", w.integral(), u.integral());
    }
}

#[test]
fn semigroup_matches_integral_on_semicircle() {
    let u = getoor(10);
    let p = FracParams::new(1, 0.5).unwrap();
    let q = HeatQuadrature::default_for(u.grid(), 0.5);
    let a = apply_fl_semigroup(&u, &p, &q).unwrap();
    let b = apply_fl_integral(&u, &p, &EvalSet::Interior).unwrap();
    let d = rel_l2_on(&a, &b, |x| x[0].abs() < 0.5);
    assert!(d < 0.01, "relative difference {d}");
    let zero = GridFunction::zeros(u.grid()).with_tight_support();
    assert_eq!(apply_fl_semigroup(&zero, &p, &q).unwrap().max_abs(), 0.0);
}

#[test]
fn semigroup_quadrature_self_convergence() {
    let g = Grid::centered_1d(3.0, 8).unwrap();
    let u = GridFunction::from_fn(&g, |x| (-4.0 * x[0] * x[0]).exp() * bump(x[0] / 2.5)).with_tight_support();
    let p = FracParams::new(1, 0.4).unwrap();
    let q = HeatQuadrature::default_for(&g, 0.4);
    let a = apply_fl_semigroup(&u, &p, &q).unwrap();
    let b = apply_fl_semigroup(&u, &p, &q.widened()).unwrap();
    let d = rel_l2_on(&b, &a, |_| true);
    assert!(d < 1e-3, "change {d}");
    let coarse = HeatQuadrature::new(2.0 * g.h() * g.h(), 100.0, 1.25, 1.6).unwrap();
    assert!(apply_fl_semigroup(&u, &p, &coarse).is_err());
}

#[test]
fn multiplier_matches_integral_on_bump() {
    let g = Grid::centered_1d(1.5, 9).unwrap();
    let u = GridFunction::from_fn(&g, |x| bump(x[0])).with_tight_support();
    for s in [0.25, 0.5, 0.75] {
        let p = FracParams::new(1, s).unwrap();
        let a = apply_fl_multiplier(&u, s, 4).unwrap();
        let b = apply_fl_integral(&u, &p, &EvalSet::Interior).unwrap();
        let d = rel_l2_on(&a, &b, |x| x[0].abs() < 1.5 - 2.0 * g.h());
        assert!(d < 5e-3, "s = {s}: relative difference {d}");
    }
    // the zero frequency carries no weight
    let shifted = GridFunction::from_fn(&g, |x| bump(x[0]) + 1.0).with_tight_support();
    let p = FracParams::new(1, 0.5).unwrap();
    let opts = IntegralOptions { exterior_tail: false, lattice_correction: true };
    let a = apply_fl_integral_with(&shifted, &p, &EvalSet::Interior, opts).unwrap().0;
    assert!(a.max_abs().is_finite());
}

#[test]
fn two_dimensional_routes_agree() {
    let g = Grid::centered_2d(1.5, 5).unwrap();
    let r = |x: [f64; 2]| (x[0] * x[0] + x[1] * x[1]).sqrt();
    let u = GridFunction::from_fn(&g, |x| bump(r(x))).with_tight_support();
    let s = 0.5;
    let p = FracParams::new(2, s).unwrap();
    let a = apply_fl_multiplier(&u, s, 4).unwrap();
    let b = apply_fl_integral(&u, &p, &EvalSet::Interior).unwrap();
    let d = rel_l2_on(&a, &b, |x| x[0].abs() < 1.4 && x[1].abs() < 1.4);
    assert!(d < 0.01, "relative difference {d}");
}
