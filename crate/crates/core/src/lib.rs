pub mod dataset;
pub mod error;
pub mod eval;
pub mod explain;
pub mod features;
pub mod harness;
pub mod learners;
pub mod rng;

pub use error::{Error, Result};
