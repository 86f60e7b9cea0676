//! Convex transport costs between one-dimensional probability laws.
//!
//! `ctl` is a numerical laboratory built around the quantile-coupling
//! representation of one-dimensional transport costs,
//!
//! ```text
//! κ_ψ(μ, ν) = ∫₀¹ ψ(F⁻¹(u) − G⁻¹(u)) du,
//! ```
//!
//! for even convex costs ψ. It provides:
//!
//! * [`cost`] — the cost family: the quadratic-then-linear generators `ψ_x`,
//!   the `g_p` scale, the entropy cost, Young duals, and the mixture
//!   representation of the class Ψ;
//! * [`dist`] — exact laws on the line (lattice laws with exact n-fold
//!   convolution, analytic families, Gaussian smoothing, the
//!   Poisson-plus-Gaussian surrogate);
//! * [`transport`] — evaluators for κ_ψ, W_p, W_φ, weighted and signed
//!   quantile functionals, and a convex-dual lower-bound witness;
//! * [`coupling`] — the explicit couplings: quantile coupling of a partial
//!   sum to its matching Gaussian, the dyadic Poisson–normal coupling, and
//!   the symmetric random walk coupling;
//! * [`tails`] — conditional value at risk, the Hardy–Littlewood maximal
//!   quantile and its generalized inverse, weak moments, Calderon norms;
//! * [`bounds`] — closed-form evaluators for every explicit constant-bearing
//!   bound, compared against exactly measured quantities;
//! * [`asymptotics`] — the limit constants reached by the finite-n costs;
//! * [`cli`] — a deterministic experiment runner emitting CSV + JSON reports.
//!
//! The guide under `book/` walks through the concepts with runnable
//! examples; every code block there is compiled and executed as a doctest.

// `!(x > 0.0)` is the NaN-rejecting validation idiom throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bounds;
pub mod cli;
pub mod cost;
pub mod coupling;
pub mod dist;
pub mod lattice;
pub mod quad;
pub mod special;
pub mod tails;
pub mod transport;

#[cfg(doctest)]
mod book;

pub use cost::{entropy_cost, g_p, huber, power_p, psi_x, young_dual, CostFunction};
pub use dist::{Distribution, Support};
pub use lattice::{DiscreteLaw, LatticeLaw};
pub use transport::{kappa, w_phi, wasserstein_p, TransportReport};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("divergent quantity: {0}")]
    Divergent(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("lattice support would exceed the cap ({0} atoms)")]
    SupportCap(usize),
    #[error("cost carries no mixing-measure tail")]
    MissingMixingTail,
    #[error("cdf difference has no zero on the working interval (laws with unequal means?)")]
    EmptyZeroSet,
    #[error("config error: {0}")]
    Config(String),
    #[error("wall-clock budget exceeded after {0:.1} s")]
    Budget(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
