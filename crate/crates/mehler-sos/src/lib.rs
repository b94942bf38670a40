//! Constructive sum-of-squares machinery for globally nonnegative polynomials.
//!
//! The library is organized around an integral operator built from a truncated
//! Mehler kernel: applying it to a nonnegative polynomial produces a sum of
//! squares, and the distance to the input is controlled by explicit degree
//! bounds. Modules:
//!
//! - [`polycore`]: sparse multivariate polynomials over exact rationals or
//!   floats, Gaussian moments, the coefficient norm.
//! - [`hermite`]: Hermite polynomials, inner products, basis expansions.
//! - [`mehler`]: the truncated kernel, the integral operator, its exact
//!   low/tail decomposition.
//! - [`bounds`]: the explicit truncation-order calculus (mu, lambda*, N_expl)
//!   and the two estimate checkers.
//! - [`certify`]: Gauss-Hermite quadrature certificates realizing the operator
//!   image as an explicit weighted sum of squares.
//! - [`verify`]: Gram/PSD checks and seeded nonnegativity sampling.

pub mod bounds;
pub mod certify;
pub mod hermite;
pub mod mehler;
pub mod polycore;
pub mod verify;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Domain(String),
    #[error("precision failure: {0}")]
    Precision(String),
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
