//! Simulation of MKC-style non-contextual hidden-variable models in finite
//! dimension.
//!
//! * [`linalg`]: validated Hermitian/density operators, spectral decomposition,
//!   Pauli and spin-1 operator families.
//! * [`stats`]: counter-keyed randomness and Monte-Carlo tallies.
//! * [`model`]: the basis catalog, colorings as lazily sampled hidden states,
//!   and measurement with state update.
//! * [`experiments`]: Mermin-Peres/Cabello tests, the spin-1 CHSH toy model and
//!   the mixture non-convexity check.
//! * [`pom`]: parity-oblivious multiplexing protocols and the parity auditor.

// Negated float comparisons are used on purpose so that NaN fails checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod pom;
pub mod stats;

pub use error::{Error, Result};
