//! Experiment harness for the scored-auction simulator: configuration
//! loading, the three experiment drivers, the built-in fixture validator,
//! and deterministic CSV emission.

pub mod config;
pub mod csvio;
pub mod experiments;
pub mod fixtures;
