//! Weak-interaction perturbative gadgets.
//!
//! Builds gadget Hamiltonians whose low-energy spectrum reproduces a 2- or
//! 3-local target Hamiltonian using only couplings weaker than the target's,
//! and checks the construction by exact numerics at small sizes.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod gadget2;
pub mod gadget3;
pub mod linalg;
pub mod model;
pub mod pauli;
pub mod verify;

pub use error::{GadgetError, Result};
pub use pauli::{Pauli, PauliSum, PauliTerm};

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
