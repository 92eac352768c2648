use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::norms::{potential_norm, DifferenceOrder, Moduli};
use crate::error::{Error, Result};
use crate::grid::{build_cutoff, DomainMask, GridFunction, Shape};
use crate::json::to_sorted_string;
use crate::special::linear_fit;

/// One refinement level: a function and the domain mask on the same grid.
#[derive(Debug, Clone, Copy)]
pub struct ProbeLevel<'a> {
    pub u: &'a GridFunction,
    pub mask: &'a DomainMask,
}

/// How u is localized before its norms are taken.
#[derive(Debug, Clone, PartialEq)]
pub enum Localization {
    /// u itself, extended by zero.
    Global,
    /// η·u with η built per level from the shapes and band width.
    Cutoff { id: String, inner: Shape, outer: Shape, moll: f64 },
}

impl Localization {
    pub fn id(&self) -> &str {
        match self {
            Localization::Global => "global",
            Localization::Cutoff { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSettings {
    pub p: f64,
    /// Increasing orders in (0, 2).
    pub sigma_scan: Vec<f64>,
    /// Also tabulate `‖ηu‖_p + ‖(−Δ)^s(ηu)‖_p` for this s.
    pub potential_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    BesovFirst,
    BesovSecond,
    Potential,
}

impl NormKind {
    fn label(self) -> &'static str {
        match self {
            NormKind::BesovFirst => "besov_first",
            NormKind::BesovSecond => "besov_second",
            NormKind::Potential => "potential",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEntry {
    pub kind: NormKind,
    pub sigma: f64,
    pub p: f64,
    pub q: f64,
    pub cutoff: String,
    pub h: f64,
    pub value: f64,
}

/// Least-squares fit of log norm against log h for one (cutoff, σ).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormFit {
    pub cutoff: String,
    pub sigma: f64,
    pub p: f64,
    pub slope: f64,
    pub half_width: f64,
    /// Growth exponent `−slope`.
    pub growth: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Threshold {
    pub cutoff: String,
    pub p: f64,
    pub sigma_hat: f64,
    /// Spread of the per-order estimates behind `sigma_hat`.
    pub half_width: f64,
    /// Whether any scanned order showed growth.
    pub detected: bool,
    /// Largest σ with all norms up to it within ×2 across levels.
    pub stable_x2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub norms: Vec<NormEntry>,
    pub fits: Vec<NormFit>,
    pub thresholds: Vec<Threshold>,
    pub ceiling: f64,
    pub levels: Vec<f64>,
}

/// Growth below this is attributed to discretization drift.
const GROWTH_FLOOR: f64 = 0.05;

impl RegularityReport {
    pub fn threshold(&self, cutoff: &str) -> Option<&Threshold> {
        self.thresholds.iter().find(|t| t.cutoff == cutoff)
    }

    pub fn to_json(&self) -> Result<String> {
        to_sorted_string(self)
    }

    /// One row per norm evaluation.
    pub fn norms_csv(&self) -> String {
        let mut out = String::from("kind,sigma,p,q,cutoff,h,value\n");
        for e in &self.norms {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{},{:e},{:e}",
                e.kind.label(),
                e.sigma,
                e.p,
                e.q,
                e.cutoff,
                e.h,
                e.value
            );
        }
        out
    }

    /// The points behind every fit.
    pub fn fit_csv(&self) -> String {
        let mut out = String::from("log_h,log_norm,sigma,p,cutoff\n");
        for e in self.norms.iter().filter(|e| e.kind != NormKind::Potential) {
            let _ = writeln!(out, "{:e},{:e},{:e},{:e},{}", e.h.ln(), e.value.ln(), e.sigma, e.p, e.cutoff);
        }
        out
    }
}

fn localize(level: &ProbeLevel<'_>, loc: &Localization) -> Result<GridFunction> {
    let u = match level.u.support() {
        Some(_) => level.u.clone(),
        None => level.u.restricted_to(level.mask),
    };
    match loc {
        Localization::Global => Ok(u),
        Localization::Cutoff { inner, outer, moll, .. } => {
            let cut = build_cutoff(level.mask, inner.clone(), outer.clone(), *moll)?;
            cut.eta().mul(&u)
        }
    }
}

/// Besov norms `B^σ_{p,p}` of the localized u over σ and the levels, with
/// the blow-up order σ̂ per localization. σ̂ is the median of `σ − d(σ)`
/// over the orders whose norms grow like `h^{−d}` with d above a small
/// floor, and the ceiling when none grow.
pub fn local_regularity_probe(
    levels: &[ProbeLevel<'_>],
    localizations: &[Localization],
    settings: &ProbeSettings,
) -> Result<RegularityReport> {
    if levels.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "a probe needs at least 3 refinement levels, got {}",
            levels.len()
        )));
    }
    let scan = &settings.sigma_scan;
    if scan.is_empty() || scan.iter().any(|s| !(*s > 0.0 && *s < 2.0)) || scan.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("sigma scan must be increasing inside (0, 2)".into()));
    }
    if localizations.is_empty() {
        return Err(Error::InvalidParameter("no localization given".into()));
    }
    let p = settings.p;
    let hs: Vec<f64> = levels.iter().map(|l| l.u.grid().h()).collect();
    if hs.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidParameter("levels must be ordered from coarse to fine".into()));
    }
    let jobs: Vec<(usize, usize)> =
        (0..localizations.len()).flat_map(|c| (0..levels.len()).map(move |l| (c, l))).collect();
    let rows: Vec<Vec<NormEntry>> = jobs
        .par_iter()
        .map(|&(c, l)| -> Result<Vec<NormEntry>> {
            let loc = &localizations[c];
            let v = localize(&levels[l], loc)?;
            let moduli = Moduli::new(&v, p)?;
            let mut out = Vec::new();
            for &sigma in scan {
                let b = moduli.besov(sigma, p);
                let kind = match b.order {
                    DifferenceOrder::First => NormKind::BesovFirst,
                    DifferenceOrder::Second => NormKind::BesovSecond,
                };
                out.push(NormEntry { kind, sigma, p, q: p, cutoff: loc.id().to_string(), h: hs[l], value: b.seminorm });
            }
            if let Some(s) = settings.potential_s {
                out.push(NormEntry {
                    kind: NormKind::Potential,
                    sigma: 2.0 * s,
                    p,
                    q: p,
                    cutoff: loc.id().to_string(),
                    h: hs[l],
                    value: potential_norm(&v, s, p)?,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let norms: Vec<NormEntry> = rows.into_iter().flatten().collect();
    let ceiling = *scan.last().expect("nonempty");
    let log_h: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let mut fits = Vec::new();
    let mut thresholds = Vec::new();
    for loc in localizations {
        let id = loc.id();
        let mut estimates = Vec::new();
        let mut stable_x2 = None;
        let mut stable = true;
        for &sigma in scan {
            let vals: Vec<f64> = norms
                .iter()
                .filter(|e| e.cutoff == id && e.sigma == sigma && e.kind != NormKind::Potential)
                .map(|e| e.value)
                .collect();
            if vals.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::Fit(format!("nonpositive norm for {id} at order {sigma}")));
            }
            let ln: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
            let (slope, _, se) = linear_fit(&log_h, &ln);
            let max = vals.iter().cloned().fold(f64::MIN, f64::max);
            let min = vals.iter().cloned().fold(f64::MAX, f64::min);
            let growth = -slope;
            fits.push(NormFit {
                cutoff: id.to_string(),
                sigma,
                p,
                slope,
                half_width: 2.0 * se,
                growth,
                max_ratio: max / min,
            });
            if growth > GROWTH_FLOOR {
                estimates.push(sigma - growth);
            }
            stable &= max / min < 2.0;
            if stable {
                stable_x2 = Some(sigma);
            }
        }
        let (sigma_hat, half_width, detected) = if estimates.is_empty() {
            (ceiling, 0.0, false)
        } else {
            estimates.sort_by(f64::total_cmp);
            let m = estimates.len();
            let med = if m % 2 == 1 { estimates[m / 2] } else { 0.5 * (estimates[m / 2 - 1] + estimates[m / 2]) };
            let spread = 0.5 * (estimates[m - 1] - estimates[0]);
            (med.clamp(f64::MIN_POSITIVE, ceiling), spread, true)
        };
        thresholds.push(Threshold { cutoff: id.to_string(), p, sigma_hat, half_width, detected, stable_x2 });
    }
    Ok(RegularityReport { norms, fits, thresholds, ceiling, levels: hs })
}

/// Slope β̂ of log|u| against log ρ over inside nodes with ρ ≤ band, with a
/// two-standard-error half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryFit {
    pub beta: f64,
    pub half_width: f64,
    pub points: usize,
}

pub fn boundary_exponent_probe(u: &GridFunction, mask: &DomainMask, band: Option<f64>) -> Result<BoundaryFit> {
    u.grid().ensure_same(mask.grid())?;
    let h = mask.grid().h();
    let band = band.unwrap_or(16.0 * h);
    if !(band >= 4.0 * h - 1e-12 * h) {
        return Err(Error::InvalidParameter(format!("band {band} is below 4h = {}", 4.0 * h)));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in mask.inside_nodes() {
        let r = mask.rho()[k];
        let v = u.get(k).abs();
        if r > 0.0 && r <= band && v > 0.0 {
            xs.push(r.ln());
            ys.push(v.ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::Fit(format!("only {} nodes with nonzero values inside the band", xs.len())));
    }
    if xs.iter().all(|x| (x - xs[0]).abs() < 1e-12) {
        return Err(Error::Fit("all band nodes share one distance".into()));
    }
    let (beta, _, se) = linear_fit(&xs, &ys);
    Ok(BoundaryFit { beta, half_width: 2.0 * se, points: xs.len() })
}
