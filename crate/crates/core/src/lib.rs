//! Exact state-vector simulation of periodically driven disordered spin chains.

pub mod config;
pub mod error;
pub mod evolution;
pub mod model;
pub mod observables;
pub mod parallel;
pub mod records;
pub mod scaling;
pub mod state;
pub mod sweep;

pub use error::{Error, Result};
