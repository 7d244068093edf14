//! Truncated chaos-expansion solver for stochastic evolution equations
//! `u_t = A u + p^◊(u) + f` with Wick-polynomial nonlinearities.
//!
//! The solution is represented by its coefficients `u_α(t)` on the
//! Fourier–Hermite basis `H_α`. Projecting the equation onto each `H_α`
//! gives a lower-triangular family of deterministic Cauchy problems that
//! [`propagator`] solves level by level.

pub mod analysis;
pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod hermite;
pub mod multiindex;
pub mod operators;
pub mod problem;
pub mod propagator;
pub mod quadrature;
pub mod report;
pub mod verify;
pub mod wick;

pub use error::{Error, Result};
pub use multiindex::{IndexSet, MultiIndex, Truncation};
pub use wick::{ChaosField, WickPolynomial};
