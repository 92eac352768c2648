//! Fractional Laplacian (−Δ)^s on bounded domains of ℝ¹ and ℝ².
//!
//! Two independent discretizations of the operator are provided, the
//! principal-value singular integral and the heat-semigroup time integral,
//! together with a Dirichlet solver, eigenpairs, commutator calculus for
//! cut-off localization and estimators for Sobolev, Besov and potential
//! norms.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod calculus;
pub mod dirichlet;
pub mod error;
pub mod fracop;
pub mod grid;
pub mod json;
pub mod regularity;
pub mod special;
pub mod theory;

pub use error::{Error, Result};
pub use grid::{
    build_cutoff, make_domain, CutoffPair, DistanceKind, DomainMask, Grid, GridFunction, IndexBox,
    Shape,
};
