//! Lip-normed operator systems at finite dimension.
//!
//! Operator systems live inside finite direct sums of matrix algebras
//! ([`opsys`]); Lipschitz seminorms are expression trees ([`seminorm`]); metric and
//! distance quantities are computed by certified conic solves ([`convex`],
//! [`metric`]); the multiplicative defect ε(r) and limit verdicts live in [`cstar`].
//! [`catalog`] builds the three standard counterexample families.

extern crate openblas_src;

pub mod catalog;
pub mod convex;
pub mod cstar;
pub mod error;
pub mod line;
pub mod linalg;
pub mod metric;
pub mod opsys;
pub mod seminorm;

pub use error::{Error, Result};
