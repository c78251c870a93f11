//! Simulation and analysis of qubit-photon dressed bound states in a finite
//! 1D microwave photonic crystal: band structure and transfer-matrix
//! transmission of the bare crystal, a coupled-cavity hopping model with
//! multilevel qubits, two independent transmission methods, analytic
//! bound-state solvers, figure-level sweeps, and a staged parameter-fitting
//! pipeline.
//!
//! All frequencies are in GHz as omega / 2 pi; angular factors live inside
//! the equations only.

pub mod boundstates;
pub mod config;
pub mod crystal;
pub mod error;
pub mod fitting;
pub mod lattice;
pub mod numeric;
pub mod spectra;
pub mod trace;
pub mod transmission;

pub use error::{Error, Result};
