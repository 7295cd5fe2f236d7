//! Simulation and exact-oracle laboratory for critical Galton-Watson trees
//! whose offspring law lies in the domain of attraction of a Cauchy law.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod harness;
pub mod looptree;
pub mod offspring;
pub mod oracle;
pub mod refdist;
pub mod rng;
pub mod scaling;
pub mod series;
pub mod stats;
pub mod tree;
pub mod walk;

pub use error::{Error, Result};
