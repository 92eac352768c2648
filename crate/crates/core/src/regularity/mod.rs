//! Fractional norms and regularity probes.

mod norms;
mod pohozaev;
mod probe;

use serde::Serialize;

use crate::error::{Error, Result};

pub use norms::{
    besov_norm, besov_norm_with, gagliardo_seminorm, potential_norm, potential_norm_with, BesovValue, DifferenceOrder,
    PotentialRoute, Region,
};
pub use pohozaev::{pohozaev_residual, pohozaev_residual_with, Extrapolation, PohozaevResidual};
pub use probe::{
    boundary_exponent_probe, local_regularity_probe, BoundaryFit, Localization, NormEntry, NormFit, NormKind,
    ProbeLevel, ProbeSettings, RegularityReport, Threshold,
};

/// Integrability or continuity gained by a solution of `(−Δ)^s u = f` with
/// `f ∈ L^p` in dimension N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Embedding {
    /// `C^{0,α}` with α = s − N/2.
    Holder { exponent: f64 },
    Bounded,
    /// `L^q` for every q in `[lo, hi)`.
    Lq { lo: f64, hi: f64 },
    /// p below `2N/(N+2s)`, outside the finite-energy setting.
    BelowThreshold,
}

pub fn embedding_map(n: usize, s: f64, p: f64) -> Result<Embedding> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidOrder(s));
    }
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("exponent p = {p} must exceed 1")));
    }
    let nf = n as f64;
    if nf < 2.0 * s {
        return Ok(Embedding::Holder { exponent: s - nf / 2.0 });
    }
    if p < 2.0 * nf / (nf + 2.0 * s) {
        return Ok(Embedding::BelowThreshold);
    }
    if p > nf / (2.0 * s) {
        return Ok(Embedding::Bounded);
    }
    Ok(Embedding::Lq { lo: p, hi: nf * p / (nf - 2.0 * s * p) })
}
