//! The hidden-variable model: a growable catalog of pairwise totally
//! incompatible bases, colorings of the observables they generate, and
//! measurement dynamics.

mod basis;
mod catalog;
mod state;

pub use basis::{basis_distance, is_totally_incompatible, COMMUTATION_TOL};
pub use catalog::{
    new_catalog, BasisCatalog, ContextHandle, ObservableHandle, DEFAULT_EPSILON, MAX_MINT_ATTEMPTS, SCALAR_TOL,
};
pub use state::{sample_hidden_state, HiddenState, MeasurementRecord, StateUpdate, IMPOSSIBLE_WEIGHT};
