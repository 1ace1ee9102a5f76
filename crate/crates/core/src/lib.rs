//! Verification toolkit for generalized Leibniz rules and multi-index moment
//! sequences.
//!
//! The crate is layered bottom-up:
//!
//! - [`multiindex`]: exact combinatorics on ℕʳ (order, height, factorials,
//!   binomials, enumeration).
//! - [`polycalc`]: exact multivariate polynomials over ℚ with symbolic `D^α`
//!   and an exact check of the generalized Leibniz rule.
//! - [`funcmodel`]: a pointwise function model evaluated on sample points of a
//!   box `Ω ⊂ ℝʳ`, including the `f·ln|f|` transform and power-sign maps.
//! - [`momentfam`]: operator families `{T_α}` and the moment-identity verifier.
//! - [`coeffsolve`]: the bilinear coefficient constraint on `{c_α}` and the
//!   support-pattern search.
//! - [`semigroup`]: moment sequences of rank r on abelian monoids.

// Tolerance tests are written as `!(x <= tol)` so that NaN counts as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeffsolve;
pub mod error;
pub mod funcmodel;
pub mod momentfam;
pub mod multiindex;
pub mod polycalc;
pub mod rational;
pub mod semigroup;

pub use error::{Error, Result};
pub use multiindex::MultiIndex;
pub use polycalc::{Polynomial, RationalPoint};
