//! Toeplitz subshifts over Z, Z^r and Z^r ⋊ F: constructions, period structures,
//! invariant measures and independence certificates.

pub mod error;
pub mod homomorphism;
pub mod independence;
pub mod array;
pub mod config;
pub mod lattice;
pub mod measures;
pub mod periods;
pub mod suites;
pub mod toeplitz_g;
pub mod toeplitz_z;

pub use error::{Error, Result};

/// Exact rational arithmetic used for measures and counting identities.
pub type Rational = num_rational::Ratio<i128>;
