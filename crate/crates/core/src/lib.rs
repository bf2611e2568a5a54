//! Pulse design and verification for preparing the orbital state
//! (|20⟩ + i|02⟩)/√2 of a single atom in one site of a 2D optical lattice.
//!
//! The crate covers the lattice potential and unit system, the single-site
//! eigenbasis, the four-level coupling coefficients, the sequential Rabi
//! schedules, the four-level model, a 2D split-operator solver for the full
//! Schrödinger equation, a tunneling-rate estimate and the scenario harness
//! used by the `orbital-forge` command-line tool.

pub mod config;
pub mod couplings;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod lattice;
pub mod model4l;
pub mod pulses;
pub mod spectral;
pub mod tdse;
pub mod tunneling;

pub use error::{Error, Result};
