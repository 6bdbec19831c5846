//! Sparse recovery via dual-density reweighted l1 minimization.

pub mod algorithms;
pub mod cone;
pub mod duality;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod merit;
pub mod modeling;
pub mod oracle;

pub use error::{Error, Result};
