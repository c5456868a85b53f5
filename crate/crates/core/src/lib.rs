//! Multi-message private information retrieval from replicated databases.
//!
//! The crate builds query tables for two schemes (an MDS-coded two-round
//! scheme and a multi-round stage scheme), evaluates them against a message
//! store, decodes the answers, and checks privacy and rate claims.

pub mod bounds;
pub mod error;
pub mod gf;
pub mod harness;
pub mod mds;
pub mod plan;
pub mod query;
pub mod rounds;
pub mod scalar;
pub mod scheme;
pub mod store;
pub mod suite;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact rational used for rates and stage counts.
pub type Rational = num_rational::BigRational;
