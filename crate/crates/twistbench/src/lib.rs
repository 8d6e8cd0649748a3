//! Stabilizer-simulation laboratory for twist-product entanglement
//! witnesses on 2D toric codes.
//!
//! The crate is organized around:
//! - [`lattice`]: site geometry, metric and region algebra;
//! - [`pauli`]: phase-tracked symplectic Pauli operators and the twist product;
//! - [`circuit`]: local Clifford circuit layers with a strict text format;
//! - [`stabilizer`]: tableau simulation, Pauli expectations and noise ensembles;
//! - [`toric`]: the checkerboard toric-code Hamiltonian, restrictions and loop pairs;
//! - [`witness`]: the twist-pairing witness and every closed-form bound;
//! - [`oracle`]: exact dense computations on small systems.

pub mod circuit;
pub mod error;
pub mod gf2;
pub mod lattice;
pub mod oracle;
pub mod pauli;
pub mod stabilizer;
pub mod toric;
pub mod witness;

pub use error::{Error, Result};
