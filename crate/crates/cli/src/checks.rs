//! Built-in property suites run by `fraclap check`.

use fraclap_core::calculus::{commutator_g_integral, epsilon_window};
use fraclap_core::dirichlet::{assemble_dirichlet, eigen_dirichlet, solve_dirichlet, ultracontractivity_probe};
use fraclap_core::fracop::{
    apply_fl_integral, apply_fl_multiplier, apply_fl_semigroup, EvalSet, FracParams, HeatQuadrature,
};
use fraclap_core::regularity::{embedding_map, gagliardo_seminorm, pohozaev_residual, Embedding, Region};
use fraclap_core::theory::{gaussian_decay_exponent, young_triple_valid};
use fraclap_core::{build_cutoff, make_domain, DomainMask, Grid, GridFunction, Shape};

use crate::commands::Verdict;
use crate::CliError;

pub const SUITES: &[&str] = &["commutator", "semigroup", "pohozaev", "ultracontractive", "theory"];

pub fn run_suite(name: &str) -> Result<Vec<Verdict>, CliError> {
    match name {
        "commutator" => commutator(),
        "semigroup" => semigroup(),
        "pohozaev" => pohozaev(),
        "ultracontractive" => ultracontractive(),
        "theory" => Ok(theory()),
        _ => Err(CliError::Usage(format!("unknown suite {name:?}; expected one of {}", SUITES.join(", ")))),
    }
}

fn verdict(property: String, value: f64, expected: String, pass: bool) -> Verdict {
    Verdict { property, value, expected, pass }
}

fn interval(level: u32) -> Result<DomainMask, CliError> {
    Ok(make_domain(&Grid::centered_1d(2.0, level)?, Shape::interval(-1.0, 1.0))?)
}

fn ones(mask: &DomainMask) -> GridFunction {
    GridFunction::from_fn(mask.grid(), |_| 1.0).restricted_to(mask)
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

/// Stability of ‖g‖₂/‖u‖_{W^{s,2}} and ‖g‖_p/(‖u‖_p + ‖u‖_{W^{s,2}}) under
/// refinement, for solutions of (−Δ)^s u = 1 on (−1, 1).
fn commutator() -> Result<Vec<Verdict>, CliError> {
    let mut out = Vec::new();
    for s in [0.25, 0.5, 0.75] {
        let params = FracParams::new(1, s)?;
        let mut ratios: [Vec<f64>; 3] = Default::default();
        for level in [7, 8, 9] {
            let mask = interval(level)?;
            let u = solve_dirichlet(&assemble_dirichlet(&mask, &params)?, &ones(&mask))?;
            let cut = build_cutoff(&mask, Shape::interval(-0.5, 0.5), Shape::interval(-0.8, 0.8), 0.2)?;
            let g = commutator_g_integral(&u, &cut, &params)?.g;
            let w = gagliardo_seminorm(&u, s, 2.0, Region::Whole)?;
            ratios[0].push(g.norm_l2() / w);
            ratios[1].push(g.norm_l2() / (u.norm_l2() + w));
            ratios[2].push(g.norm_lp(4.0) / (u.norm_lp(4.0) + w));
        }
        for (label, r) in ["g2_over_ws2", "g2_over_l2_plus_ws2", "g4_over_l4_plus_ws2"].iter().zip(&ratios) {
            let v = spread(r);
            out.push(verdict(format!("{label}.s{s}"), v, "< 2".into(), v < 2.0));
        }
    }
    Ok(out)
}

fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

fn rel_l2_interior(a: &GridFunction, b: &GridFunction) -> f64 {
    let g = a.grid();
    let (mut num, mut den) = (0.0, 0.0);
    for k in (0..g.len()).filter(|&k| !g.on_box_boundary(k)) {
        num += (a.get(k) - b.get(k)).powi(2);
        den += b.get(k).powi(2);
    }
    (num / den).sqrt()
}

/// Heat-semigroup and Fourier routes against the singular integral.
fn semigroup() -> Result<Vec<Verdict>, CliError> {
    let g = Grid::centered_1d(1.5, 9)?;
    let u = GridFunction::from_fn(&g, |x| bump(x[0])).with_tight_support();
    let mut out = Vec::new();
    for s in [0.25, 0.5, 0.75] {
        let p = FracParams::new(1, s)?;
        let reference = apply_fl_integral(&u, &p, &EvalSet::Interior)?;
        let heat = apply_fl_semigroup(&u, &p, &HeatQuadrature::default_for(&g, s))?;
        let fourier = apply_fl_multiplier(&u, s, 4)?;
        let dh = rel_l2_interior(&heat, &reference);
        let df = rel_l2_interior(&fourier, &reference);
        out.push(verdict(format!("semigroup_vs_integral.s{s}"), dh, "≤ 0.05".into(), dh <= 0.05));
        out.push(verdict(format!("multiplier_vs_integral.s{s}"), df, "≤ 0.01".into(), df <= 0.01));
    }
    Ok(out)
}

fn pohozaev() -> Result<Vec<Verdict>, CliError> {
    let s = 0.5;
    let mut residuals = Vec::new();
    for level in [8, 9, 10] {
        let mask = interval(level)?;
        let pair = eigen_dirichlet(&assemble_dirichlet(&mask, &FracParams::new(1, s)?)?, 1)?.remove(0);
        residuals.push(pohozaev_residual(&pair, &mask, s)?.relative);
    }
    let last = residuals[2];
    let decreasing = residuals.windows(2).all(|w| w[1] < w[0]);
    Ok(vec![
        verdict("relative_residual.h2^-10".into(), last, "≤ 0.05".into(), last <= 0.05),
        verdict("decreasing_under_refinement".into(), residuals[0] - last, "monotone".into(), decreasing),
    ])
}

/// Slope of log ‖e^{−tA}δ‖_∞ against log t for a unit mass at the centre.
fn ultracontractive() -> Result<Vec<Verdict>, CliError> {
    let mask = interval(8)?;
    let h = mask.grid().h();
    let centre = (mask.grid().len() - 1) / 2;
    let delta = GridFunction::from_fn(mask.grid(), |_| 0.0);
    let mut vals = delta.into_values();
    vals[centre] = 1.0 / h;
    let delta = GridFunction::new(mask.grid(), vals)?.restricted_to(&mask);
    let mut out = Vec::new();
    for (s, (t0, t1)) in [(0.5, (0.01_f64, 0.3_f64)), (0.25, (0.2, 1.0))] {
        let op = assemble_dirichlet(&mask, &FracParams::new(1, s)?)?;
        let times: Vec<f64> = (0..12).map(|k| t0 * (t1 / t0).powf(k as f64 / 11.0)).collect();
        let rep = ultracontractivity_probe(&op, &delta, &times)?;
        let err = (rep.slope - rep.expected).abs();
        out.push(verdict(format!("decay_slope.s{s}"), rep.slope, format!("{} ± 0.15", rep.expected), err <= 0.15));
    }
    Ok(out)
}

/// Closed-form exponent identities.
fn theory() -> Vec<Verdict> {
    let mut out = Vec::new();
    for n in 1..=4 {
        let nf = n as f64;
        let e0 = gaussian_decay_exponent(n, 2.0, 0);
        out.push(verdict(format!("gaussian_l2.N{n}"), e0, format!("{}", -nf / 4.0), e0 == -nf / 4.0));
        let e1 = gaussian_decay_exponent(n, 2.0, 1);
        out.push(verdict(format!("gaussian_grad_l2.N{n}"), e1, format!("{}", -nf / 4.0 - 0.5), e1 == -nf / 4.0 - 0.5));
    }
    for (q1, q2, q3) in [(1.0, 2.0, 2.0), (2.0, 1.0, 2.0)] {
        out.push(verdict(format!("young.{q1}_{q2}_{q3}"), 1.0, "valid".into(), young_triple_valid(q1, q2, q3)));
    }
    for k in 0..=10 {
        let eps = k as f64 / 10.0;
        let q1 = (4.0 - 2.0 * eps) / (4.0 - 3.0 * eps);
        let ok = young_triple_valid(q1, 2.0 - eps, 2.0);
        out.push(verdict(format!("young.pqr_eps{eps}"), eps, "valid".into(), ok));
    }
    for n in 3..=5 {
        for k in 1..=9 {
            let s = k as f64 / 10.0;
            let ok = epsilon_window(n, s).map(|w| !w.is_empty()).unwrap_or(false);
            out.push(verdict(format!("epsilon_window.N{n}.s{s}"), s, "nonempty".into(), ok));
        }
    }
    let emb = [
        ((3, 0.5, 4.0), Embedding::Bounded),
        ((3, 0.5, 2.0), Embedding::Lq { lo: 2.0, hi: 6.0 }),
        ((1, 0.75, 2.0), Embedding::Holder { exponent: 0.25 }),
    ];
    for ((n, s, p), want) in emb {
        let ok = embedding_map(n, s, p).map(|e| e == want).unwrap_or(false);
        out.push(verdict(format!("embedding.N{n}.s{s}.p{p}"), p, format!("{want:?}"), ok));
    }
    out
}
