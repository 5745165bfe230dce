//! Simulation of a reversible Wigner's-friend protocol on a dense state vector.
//!
//! The laboratory is five qubits (atom, poison, cat, Bob's memory, paper). A
//! rotation and a CNOT cascade entangle the first four; a definiteness query
//! writes an answer onto the paper that is the same in every branch; the
//! cascade is then undone while the paper keeps its record. The
//! [`dynamics`] module contrasts purely unitary evolution with an objective
//! collapse at Bob's observation.

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod protocol;
pub mod qstate;

pub use error::{Error, Result};
