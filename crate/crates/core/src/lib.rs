pub mod augment;
pub mod checks;
pub mod cli;
pub mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod numfmt;
pub mod rng;
pub mod spectral;
pub mod theory;
pub mod training;

pub use error::{Error, Result};
