pub mod benchmarks;
pub mod cli;
pub mod copulas;
pub mod error;
pub mod header;
pub mod inference;
pub mod optim;
pub mod pipeline;
pub mod process;
pub mod quad;
pub mod rng;
pub mod selection_risk;
pub mod specfun;
pub mod stats;
pub mod transform;

pub use error::{Error, Result};
