use fraclap_core::calculus::{
    commutator_g_heat, commutator_g_integral, duhamel_path, duhamel_z, epsilon_window, product_interaction,
    split_i1_i2,
};
use fraclap_core::fracop::{apply_fl_integral, heat_convolve, EvalSet, FracParams, HeatQuadrature};
use fraclap_core::{build_cutoff, make_domain, CutoffPair, DomainMask, Grid, GridFunction, IndexBox, Shape};
use proptest::prelude::*;

fn setup(level: u32) -> (Grid, DomainMask, CutoffPair) {
    let g = Grid::centered_1d(2.0, level).unwrap();
    let mask = make_domain(&g, Shape::interval(-1.0, 1.0)).unwrap();
    let cut = build_cutoff(&mask, Shape::interval(-0.5, 0.5), Shape::interval(-0.8, 0.8), 0.2).unwrap();
    (g, mask, cut)
}

fn smooth(g: &Grid, mask: &DomainMask) -> GridFunction {
    GridFunction::from_fn(g, |p| {
        let x = p[0];
        (1.0 - x * x).max(0.0).powi(4) * (1.0 + 0.5 * x)
    })
    .restricted_to(mask)
}

fn bump(g: &Grid, c: f64, r: f64) -> GridFunction {
    GridFunction::from_fn(g, |p| {
        let x = (p[0] - c) / r;
        if x.abs() < 1.0 {
            (-1.0 / (1.0 - x * x)).exp()
        } else {
            0.0
        }
    })
    .with_tight_support()
}

fn interior_norm(f: &GridFunction) -> f64 {
    let g = f.grid();
    let v: Vec<f64> = (0..g.len()).map(|k| if g.on_box_boundary(k) { 0.0 } else { f.get(k) }).collect();
    GridFunction::new(g, v).unwrap().norm_l2()
}

#[test]
fn leibniz_defect_is_small() {
    let g = Grid::centered_1d(2.0, 9).unwrap();
    let u = bump(&g, -0.2, 0.9);
    let v = bump(&g, 0.3, 0.7);
    let eval = EvalSet::Interior;
    for s in [0.25, 0.5, 0.75] {
        let p = FracParams::new(1, s).unwrap();
        let uv = u.mul(&v).unwrap();
        let lhs = apply_fl_integral(&uv, &p, &eval).unwrap();
        let a = u.mul(&apply_fl_integral(&v, &p, &eval).unwrap()).unwrap();
        let b = v.mul(&apply_fl_integral(&u, &p, &eval).unwrap()).unwrap();
        let i = product_interaction(&u, &v, &p, &eval).unwrap();
        let defect = lhs.sub(&a).unwrap().sub(&b).unwrap().add(&i).unwrap();
        let rel = interior_norm(&defect) / uv.norm_l2();
        assert!(rel < 1e-3, "s = {s}: defect {rel}");
    }
}

#[test]
fn interaction_with_constant_vanishes() {
    let g = Grid::centered_1d(1.5, 7).unwrap();
    let u = bump(&g, 0.1, 0.8);
    let one = GridFunction::from_fn(&g, |_| 2.5).with_support(IndexBox::full(&g)).unwrap();
    let p = FracParams::new(1, 0.4).unwrap();
    let i = product_interaction(&u, &one, &p, &EvalSet::Interior).unwrap();
    // c on the box is c·1_box, so only the exterior tail survives
    let fl_one = apply_fl_integral(&one, &p, &EvalSet::Interior).unwrap();
    let diff = i.sub(&u.mul(&fl_one).unwrap()).unwrap();
    assert!(diff.max_abs() < 1e-10 * u.max_abs() * fl_one.max_abs().max(1.0));
}

#[test]
fn commutator_identity_and_degenerate_cutoff() {
    let (g, mask, cut) = setup(9);
    let u = smooth(&g, &mask);
    for s in [0.25, 0.75] {
        let p = FracParams::new(1, s).unwrap();
        let c = commutator_g_integral(&u, &cut, &p).unwrap();
        assert!(c.identity_residual < 1e-3, "residual {}", c.identity_residual);
        assert!(c.g.norm_l2() > 1e-2);
        let flat = commutator_g_integral(&u, &CutoffPair::constant(&g), &p).unwrap();
        assert!(flat.g.max_abs() < 1e-9 * c.g.max_abs(), "{}", flat.g.max_abs());
    }
}

#[test]
fn split_partitions_the_interaction() {
    let (g, mask, cut) = setup(8);
    let u = smooth(&g, &mask);
    let p = FracParams::new(1, 0.6).unwrap();
    let (i1, i2) = split_i1_i2(&u, &cut, &mask, &p).unwrap();
    let full = product_interaction(&u, cut.eta(), &p, &EvalSet::Interior).unwrap();
    let rel = i1.add(&i2).unwrap().sub(&full).unwrap().norm_l2() / full.norm_l2();
    assert!(rel < 1e-12, "partition {rel}");
    let omega: std::collections::HashSet<usize> = cut.omega().iter().copied().collect();
    for k in 0..g.len() {
        if !omega.contains(&k) {
            assert_eq!(i2.get(k), 0.0, "node {k}");
        }
    }
    assert!(i2.norm_l2() > 0.0);
    let outside = GridFunction::from_fn(&g, |p| if p[0] > 1.2 && p[0] < 1.3 { 1.0 } else { 0.0 }).with_tight_support();
    assert!(split_i1_i2(&u.add(&outside).unwrap(), &cut, &mask, &p).is_err());
}

#[test]
fn duhamel_degenerate_cases() {
    let (g, mask, cut) = setup(7);
    let u = smooth(&g, &mask);
    let st = duhamel_z(&u, &cut, 0.0, 2).unwrap();
    assert_eq!(st.z.max_abs(), 0.0);
    assert_eq!(st.phi.values(), u.values());
    let flat = duhamel_z(&u, &CutoffPair::constant(&g), 0.05, 2).unwrap();
    assert_eq!(flat.z.max_abs(), 0.0);
    assert!(duhamel_z(&u, &cut, 0.1, 1).is_err());
    assert!(duhamel_z(&u, &cut, -0.1, 2).is_err());
    let thin = build_cutoff(&mask, Shape::interval(-0.5, 0.5), Shape::interval(-0.8, 0.8), 3.0 * g.h()).unwrap();
    assert!(duhamel_z(&u, &thin, 0.1, 2).is_err());
}

#[test]
fn duhamel_matches_heat_identity() {
    let (g, mask, cut) = setup(9);
    let u = smooth(&g, &mask);
    let times = [1e-3, 1e-2, 0.3, 2.0];
    let path = duhamel_path(&u, &cut, &times, 2).unwrap();
    let eta = cut.eta();
    for st in &path {
        let rho = heat_convolve(&eta.mul(&u).unwrap(), st.t).unwrap();
        let phi = heat_convolve(&u, st.t).unwrap();
        assert_eq!(phi.values(), st.phi.values());
        let exact = rho.sub(&eta.mul(&phi).unwrap()).unwrap();
        let rel = st.z.sub(&exact).unwrap().norm_l2() / exact.norm_l2();
        assert!(rel < 5e-3, "t = {}: {rel}", st.t);
        for k in 0..g.len() {
            assert!((st.z.get(k) - (st.z1.get(k) - st.z2.get(k))).abs() <= 1e-15 * st.z1.max_abs().max(1.0));
        }
    }
}

#[test]
fn heat_route_matches_integral_route() {
    let (g, mask, cut) = setup(9);
    let u = smooth(&g, &mask);
    let s = 0.5;
    let p = FracParams::new(1, s).unwrap();
    let gi = commutator_g_integral(&u, &cut, &p).unwrap().g;
    let (gh, rep) = commutator_g_heat(&u, &cut, &p, &HeatQuadrature::default_for(&g, s)).unwrap();
    let rel = interior_norm(&gh.sub(&gi).unwrap()) / gi.norm_l2();
    assert!(rel < 0.05, "cross-route {rel}");
    assert!(rep.small_time_correction < 0.25 * gh.norm_l2());
    assert!(rep.a22_tail_bound < 0.05 * gh.norm_l2());
    assert_eq!(rep.reference_exponent, 0.75);
    let json = rep.to_json().unwrap();
    for key in ["a11", "a12", "a21", "a22", "fitted_exponent"] {
        assert!(json.contains(key));
    }
    let (flat, _) = commutator_g_heat(&u, &CutoffPair::constant(&g), &p, &HeatQuadrature::default_for(&g, s)).unwrap();
    assert_eq!(flat.max_abs(), 0.0);
}

#[test]
fn z1_grows_like_the_regularity_predicts() {
    let g = Grid::centered_1d(2.0, 9).unwrap();
    let h = g.h();
    let mask = make_domain(&g, Shape::interval(-1.0, 1.0)).unwrap();
    let cut = build_cutoff(&mask, Shape::interval(-0.2, 0.2), Shape::interval(-0.95, 0.95), 0.7).unwrap();
    let s = 0.5;
    let u = GridFunction::from_fn(&g, |p| {
        let x = p[0];
        let psi = (1.0 - x * x).max(0.0).powi(3);
        psi * (1..=9).map(|k| 2f64.powf(-(k as f64) * s) * (2f64.powi(k) * x + k as f64).cos()).sum::<f64>()
    })
    .restricted_to(&mask);
    let n = 12;
    let times: Vec<f64> = (0..n).map(|i| h * h * (0.1 / (h * h)).powf(i as f64 / (n - 1) as f64)).collect();
    let path = duhamel_path(&u, &cut, &times, 2).unwrap();
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = path.iter().map(|st| st.z1.norm_l2().ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n as f64, ys.iter().sum::<f64>() / n as f64);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope - 0.75).abs() < 0.1, "slope {slope}");
}

#[test]
fn epsilon_windows_are_nonempty() {
    for n in 3..=5 {
        for k in 1..=9 {
            let w = epsilon_window(n, k as f64 / 10.0).unwrap();
            assert!(w.lo < w.hi && w.lo >= 0.0 && w.hi <= 1.0);
        }
    }
    let w = epsilon_window(3, 0.5).unwrap();
    assert_eq!((w.lo, w.hi), (0.5, 1.0));
    assert!(epsilon_window(2, 0.5).is_err());
    assert!(epsilon_window(3, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn interaction_is_symmetric(
        a in proptest::collection::vec(-1.0f64..1.0, 9),
        b in proptest::collection::vec(-1.0f64..1.0, 13),
        s in 0.05f64..0.95,
    ) {
        let g = Grid::centered_1d(1.0, 4).unwrap();
        let mk = |vals: &[f64], lo: usize| {
            let mut v = vec![0.0; g.len()];
            v[lo..lo + vals.len()].copy_from_slice(vals);
            GridFunction::new(&g, v).unwrap().with_tight_support()
        };
        let u = mk(&a, 6);
        let v = mk(&b, 10);
        let p = FracParams::new(1, s).unwrap();
        let x = product_interaction(&u, &v, &p, &EvalSet::Interior).unwrap();
        let y = product_interaction(&v, &u, &p, &EvalSet::Interior).unwrap();
        for k in 0..g.len() {
            prop_assert_eq!(x.get(k).to_bits(), y.get(k).to_bits());
        }
    }
}
