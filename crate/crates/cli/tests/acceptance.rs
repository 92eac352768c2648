//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use fraclap_core::calculus::{commutator_g_heat, commutator_g_integral, duhamel_path, epsilon_window, product_interaction};
use fraclap_core::dirichlet::{
    assemble_dirichlet, eigen_dirichlet, solve_dirichlet, solve_dirichlet_with, ultracontractivity_probe,
};
use fraclap_core::fracop::{
    apply_fl_integral, apply_fl_multiplier, apply_fl_semigroup, EvalSet, FracParams, HeatQuadrature,
};
use fraclap_core::regularity::{
    boundary_exponent_probe, gagliardo_seminorm, local_regularity_probe, pohozaev_residual, Localization,
    ProbeLevel, ProbeSettings, Region,
};
use fraclap_core::theory::{gaussian_decay_exponent, young_triple_valid};
use fraclap_core::{build_cutoff, make_domain, DomainMask, Grid, GridFunction, Shape};

type Check = Result<(bool, String), Box<dyn std::error::Error>>;
type Criterion = (&'static str, fn() -> Check);

fn interval(level: u32) -> DomainMask {
    make_domain(&Grid::centered_1d(2.0, level).unwrap(), Shape::interval(-1.0, 1.0)).unwrap()
}

fn ones(mask: &DomainMask) -> GridFunction {
    GridFunction::from_fn(mask.grid(), |_| 1.0).restricted_to(mask)
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

fn interior(f: &GridFunction) -> GridFunction {
    let g = f.grid();
    let v = (0..g.len()).map(|k| if g.on_box_boundary(k) { 0.0 } else { f.get(k) }).collect();
    GridFunction::new(g, v).unwrap()
}

fn rel(a: &GridFunction, b: &GridFunction) -> f64 {
    interior(&a.sub(b).unwrap()).norm_l2() / interior(b).norm_l2()
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

fn getoor_exactness() -> Check {
    let mask = interval(10);
    let op = assemble_dirichlet(&mask, &FracParams::new(1, 0.5)?)?;
    let (u, _) = solve_dirichlet_with(&op, &ones(&mask))?;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..u.grid().len() {
        let x = u.grid().coord(k)[0];
        if x.abs() < 0.5 {
            let exact = (1.0 - x * x).sqrt();
            num += (u.get(k) - exact).powi(2);
            den += exact * exact;
        }
    }
    let err = (num / den).sqrt();
    Ok((err <= 0.01, format!("relative L2 error {err:.2e}")))
}

fn representation_equivalence() -> Check {
    let g = Grid::centered_1d(1.5, 9)?;
    let u = bump(&g, 0.0, 1.0);
    let mut worst = (0.0f64, 0.0f64);
    for s in [0.25, 0.5, 0.75] {
        let p = FracParams::new(1, s)?;
        let integral = apply_fl_integral(&u, &p, &EvalSet::Interior)?;
        let heat = apply_fl_semigroup(&u, &p, &HeatQuadrature::default_for(&g, s))?;
        let fourier = apply_fl_multiplier(&u, s, 4)?;
        worst.0 = worst.0.max(rel(&fourier, &integral));
        worst.1 = worst.1.max(rel(&heat, &integral)).max(rel(&heat, &fourier));
    }
    Ok((worst.0 <= 0.01 && worst.1 <= 0.05, format!("multiplier {:.2e}, semigroup {:.2e}", worst.0, worst.1)))
}

fn product_rule() -> Check {
    let g = Grid::centered_1d(2.0, 9)?;
    let pairs = [(bump(&g, -0.2, 0.9), bump(&g, 0.3, 0.7)), (bump(&g, 0.0, 1.2), bump(&g, 0.5, 0.4))];
    let mut worst = 0.0f64;
    for s in [0.25, 0.5, 0.75] {
        let p = FracParams::new(1, s)?;
        let e = EvalSet::Interior;
        for (u, v) in &pairs {
            let uv = u.mul(v)?;
            let lhs = apply_fl_integral(&uv, &p, &e)?;
            let a = u.mul(&apply_fl_integral(v, &p, &e)?)?;
            let b = v.mul(&apply_fl_integral(u, &p, &e)?)?;
            let defect = lhs.sub(&a)?.sub(&b)?.add(&product_interaction(u, v, &p, &e)?)?;
            worst = worst.max(interior(&defect).norm_l2() / uv.norm_l2());
        }
    }
    Ok((worst <= 1e-3, format!("worst defect {worst:.2e}")))
}

fn commutator_stability() -> Check {
    let mut worst = 1.0f64;
    for s in [0.25, 0.5, 0.75] {
        let params = FracParams::new(1, s)?;
        let mut ratios = vec![Vec::new(); 3];
        for level in [7, 8, 9] {
            let mask = interval(level);
            let u = solve_dirichlet(&assemble_dirichlet(&mask, &params)?, &ones(&mask))?;
            let cut = build_cutoff(&mask, Shape::interval(-0.5, 0.5), Shape::interval(-0.8, 0.8), 0.2)?;
            let g = commutator_g_integral(&u, &cut, &params)?.g;
            let w = gagliardo_seminorm(&u, s, 2.0, Region::Whole)?;
            ratios[0].push(g.norm_l2() / w);
            ratios[1].push(g.norm_l2() / (u.norm_l2() + w));
            ratios[2].push(g.norm_lp(4.0) / (u.norm_lp(4.0) + w));
        }
        for r in &ratios {
            let max = r.iter().cloned().fold(f64::MIN, f64::max);
            let min = r.iter().cloned().fold(f64::MAX, f64::min);
            worst = worst.max(max / min);
        }
    }
    Ok((worst < 2.0, format!("largest max/min ratio {worst:.4}")))
}

fn heat_remainder() -> Check {
    let g = Grid::centered_1d(2.0, 9)?;
    let mask = make_domain(&g, Shape::interval(-1.0, 1.0))?;
    let cut = build_cutoff(&mask, Shape::interval(-0.5, 0.5), Shape::interval(-0.8, 0.8), 0.2)?;
    let u = GridFunction::from_fn(&g, |p| (1.0 - p[0] * p[0]).max(0.0).powi(4) * (1.0 + 0.5 * p[0])).restricted_to(&mask);
    let mut worst = 0.0f64;
    for s in [0.25, 0.5, 0.75] {
        let p = FracParams::new(1, s)?;
        let gi = commutator_g_integral(&u, &cut, &p)?.g;
        let (gh, _) = commutator_g_heat(&u, &cut, &p, &HeatQuadrature::default_for(&g, s))?;
        worst = worst.max(rel(&gh, &gi));
    }
    Ok((worst <= 0.05, format!("worst relative difference {worst:.2e}")))
}

fn duhamel_exponent() -> Check {
    let g = Grid::centered_1d(2.0, 9)?;
    let h = g.h();
    let mask = make_domain(&g, Shape::interval(-1.0, 1.0))?;
    let cut = build_cutoff(&mask, Shape::interval(-0.2, 0.2), Shape::interval(-0.95, 0.95), 0.7)?;
    let s = 0.5;
    let u = GridFunction::from_fn(&g, |p| {
        let x = p[0];
        let psi = (1.0 - x * x).max(0.0).powi(3);
        psi * (1..=9).map(|k| 2f64.powf(-(k as f64) * s) * (2f64.powi(k) * x + k as f64).cos()).sum::<f64>()
    })
    .restricted_to(&mask);
    let n = 12;
    let times: Vec<f64> = (0..n).map(|i| h * h * (0.1 / (h * h)).powf(i as f64 / (n - 1) as f64)).collect();
    let path = duhamel_path(&u, &cut, &times, 2)?;
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = path.iter().map(|st| st.z1.norm_l2().ln()).collect();
    let m = slope(&xs, &ys);
    let want = (1.0 + s) / 2.0;
    Ok(((m - want).abs() <= 0.1, format!("slope {m:.3}, expected {want}")))
}

fn getoor(mask: &DomainMask, s: f64) -> GridFunction {
    solve_dirichlet(&assemble_dirichlet(mask, &FracParams::new(1, s).unwrap()).unwrap(), &ones(mask)).unwrap()
}

fn regularity_dichotomy() -> Check {
    let masks: Vec<DomainMask> = [7, 8, 9].into_iter().map(interval).collect();
    let us: Vec<GridFunction> = masks.iter().map(|m| getoor(m, 0.5)).collect();
    let levels: Vec<ProbeLevel> = us.iter().zip(&masks).map(|(u, mask)| ProbeLevel { u, mask }).collect();
    let locs = [
        Localization::Global,
        Localization::Cutoff {
            id: "interior".into(),
            inner: Shape::interval(-0.5, 0.5),
            outer: Shape::interval(-0.8, 0.8),
            moll: 0.2,
        },
    ];
    let sigma_scan = (1..=19).map(|k| k as f64 / 10.0).collect();
    let r = local_regularity_probe(&levels, &locs, &ProbeSettings { p: 2.0, sigma_scan, potential_s: None })?;
    let inner = r.threshold("interior").unwrap();
    let global = r.threshold("global").unwrap();
    let pass = !inner.detected && global.detected && (global.sigma_hat - 1.0).abs() <= 0.1;
    Ok((pass, format!("interior {}, global {:.3}", if inner.detected { "detected" } else { "none" }, global.sigma_hat)))
}

fn boundary_exponent() -> Check {
    let mask = interval(10);
    let a = boundary_exponent_probe(&getoor(&mask, 0.5), &mask, None)?.beta;
    let mask = interval(9);
    let e = eigen_dirichlet(&assemble_dirichlet(&mask, &FracParams::new(1, 0.75)?)?, 1)?;
    let b = boundary_exponent_probe(&e[0].vec, &mask, None)?.beta;
    let pass = (a - 0.5).abs() <= 0.05 && (b - 0.75).abs() <= 0.05;
    Ok((pass, format!("getoor {a:.4}, eigenfunction {b:.4}")))
}

fn pohozaev() -> Check {
    let mut rs = Vec::new();
    for level in [8, 9, 10] {
        let mask = interval(level);
        let pair = eigen_dirichlet(&assemble_dirichlet(&mask, &FracParams::new(1, 0.5)?)?, 1)?.remove(0);
        rs.push(pohozaev_residual(&pair, &mask, 0.5)?.relative);
    }
    let pass = rs[2] <= 0.05 && rs.windows(2).all(|w| w[1] < w[0]);
    Ok((pass, format!("residuals {:.4} {:.4} {:.4}", rs[0], rs[1], rs[2])))
}

fn ultracontractive() -> Check {
    let mask = interval(8);
    let g = *mask.grid();
    let mut v = vec![0.0; g.len()];
    v[(g.len() - 1) / 2] = 1.0 / g.h();
    let delta = GridFunction::new(&g, v)?.restricted_to(&mask);
    let mut pass = true;
    let mut detail = Vec::new();
    for (s, t0, t1) in [(0.5, 0.01f64, 0.3f64), (0.25, 0.2, 1.0)] {
        let op = assemble_dirichlet(&mask, &FracParams::new(1, s)?)?;
        let times: Vec<f64> = (0..12).map(|k| t0 * (t1 / t0).powf(k as f64 / 11.0)).collect();
        let rep = ultracontractivity_probe(&op, &delta, &times)?;
        let want = -1.0 / (2.0 * s);
        pass &= (rep.slope - want).abs() <= 0.15;
        detail.push(format!("s={s}: {:.3} (expected {want})", rep.slope));
    }
    Ok((pass, detail.join(", ")))
}

fn theory_anchors() -> Check {
    let mut failures = 0;
    let mut total = 0;
    let mut check = |ok: bool| {
        total += 1;
        if !ok {
            failures += 1;
        }
    };
    for n in 1..=5 {
        let nf = n as f64;
        check(gaussian_decay_exponent(n, 2.0, 0) == -nf / 4.0);
        check(gaussian_decay_exponent(n, 2.0, 1) == -nf / 4.0 - 0.5);
    }
    check(young_triple_valid(1.0, 2.0, 2.0));
    check(young_triple_valid(2.0, 1.0, 2.0));
    for k in 0..=10 {
        let eps = k as f64 / 10.0;
        check(young_triple_valid((4.0 - 2.0 * eps) / (4.0 - 3.0 * eps), 2.0 - eps, 2.0));
    }
    for n in 3..=5 {
        for k in 1..=9 {
            check(epsilon_window(n, k as f64 / 10.0).map(|w| !w.is_empty()).unwrap_or(false));
        }
    }
    Ok((failures == 0, format!("{}/{total} anchors hold", total - failures)))
}

fn run_twice(dir: &Path, verb: &str, config: &Path) -> Result<bool, Box<dyn std::error::Error>> {
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.join(format!("{verb}-{name}"));
        let status = Command::new(env!("CARGO_BIN_EXE_fraclap"))
            .args([verb, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .stdout(std::process::Stdio::null())
            .status()?;
        if !status.success() {
            return Ok(false);
        }
        let mut files: Vec<_> = std::fs::read_dir(&out)?
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap() != "timing.txt")
            .collect();
        files.sort();
        let bytes: Vec<(String, Vec<u8>)> = files
            .iter()
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap()))
            .collect();
        outputs.push(bytes);
    }
    Ok(!outputs[0].is_empty() && outputs[0] == outputs[1])
}

fn determinism() -> Check {
    let tmp = tempfile::TempDir::new()?;
    let base = "[scenario]\nid = det\n[domain]\nshape = interval -1 1\n[operator]\ns = 0.4\n";
    let solve = tmp.path().join("solve.ini");
    std::fs::write(&solve, format!("{base}[grid]\nlevels = 9\n[source]\nvalue = 1\n[eigen]\ncount = 2\n"))?;
    let probe = tmp.path().join("probe.ini");
    std::fs::write(
        &probe,
        format!("{base}[grid]\nlevels = 6, 7, 8\n[probe]\nglobal = true\npotential = true\n[cutoff.mid]\ninner = interval -0.3 0.3\nouter = interval -0.6 0.6\nmoll = 0.2\n"),
    )?;
    let mut ok = true;
    for (verb, cfg) in [("solve", &solve), ("eigen", &solve), ("probe", &probe)] {
        ok &= run_twice(tmp.path(), verb, cfg)?;
    }
    Ok((ok, "solve, eigen and probe reruns compared byte for byte".into()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("Getoor exactness", getoor_exactness),
        ("representation equivalence", representation_equivalence),
        ("product rule", product_rule),
        ("commutator bound stability", commutator_stability),
        ("heat-route remainder", heat_remainder),
        ("Duhamel small-time exponent", duhamel_exponent),
        ("local vs global regularity", regularity_dichotomy),
        ("boundary exponent", boundary_exponent),
        ("Pohozaev residual", pohozaev),
        ("ultracontractive decay", ultracontractive),
        ("theory calculators", theory_anchors),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match std::panic::catch_unwind(check) {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        if !pass {
            failed += 1;
        }
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {:2}: {verdict} {name}: {detail} ({:.1}s)", i + 1, start.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
