//! Meta-evaluation of machine-translation metrics across datasets.

pub mod advval;
pub mod corpus;
pub mod error;
pub mod meta_eval;
pub mod metrics;
pub mod rng;
pub mod significance;
pub mod variance;

pub use error::{Error, Result};
