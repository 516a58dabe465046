//! Simulation of a quantum-dot spin-heat engine: a three-level dot coupled to
//! a single effective phonon mode, propagated through a staged laser cycle,
//! followed by hyperfine nuclear-spin erasure.

pub mod cli;
pub mod engine;
pub mod hyperfine;
pub mod error;
pub mod liouvillian;
pub mod propagator;
pub mod quantum_core;
pub mod spectral;
pub mod units;

pub use error::{Error, Result};
