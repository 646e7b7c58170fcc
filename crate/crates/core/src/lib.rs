pub mod backwards;
pub mod error;
pub mod harris;
pub mod lattice;
pub mod observables;
pub mod parallel;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
