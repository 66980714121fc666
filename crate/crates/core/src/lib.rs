//! Cornish–Fisher and Edgeworth expansions for standard estimates about a
//! normal or gamma base distribution.
//!
//! The symbolic layer works with exact rational polynomials in the
//! generalized Hermite functions `H_r`; the numeric layer evaluates the
//! resulting series for distribution functions, densities and quantiles.

pub mod basedist;
pub mod bell;
pub mod cumulants;
pub mod engine;
pub mod error;
pub mod hbasis;
pub mod oracle;
pub mod partitions;
pub mod poly;
pub mod ring;
pub mod special;
pub mod validation;

pub use error::{Error, Result};
