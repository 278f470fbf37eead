//! Knowledge graph completion with generalized score functions, vertical
//! reference aggregation and relative-distance negative sampling.

pub mod cache;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod real;
pub mod rng;
pub mod sampling;
pub mod train;
pub mod vlp;

pub use error::{Error, Result};
pub use real::Real;
