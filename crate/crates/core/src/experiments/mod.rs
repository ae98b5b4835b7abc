//! Contextuality experiments run against the hidden-variable model.

mod born;
mod cabello;
mod chsh;
mod mixture;
mod square;

pub use born::{born_convergence, coloring_law_check, BornCheck, ColoringLawReport};
pub use cabello::{
    run_cabello_sequential, run_cabello_single_shot, CabelloResult, SequentialOptions, SequentialResult,
};
pub use chsh::{run_chsh_toy, ChshToyModel, ChshToyResult, Setting};
pub use mixture::{mixture_nonconvexity_demo, Estimate, MixtureResult};
pub use square::{
    cabello_sum_of, classical_bound_bruteforce, ks_obstruction_check, satisfiable_with_targets, ClassicalBound,
    Context, MerminPeresSquare,
};

use crate::stats::RngKey;

/// Seed for the hidden state of one shot.
pub(crate) fn shot_seed(seed: u64, domain: u64, shot: u64) -> u64 {
    RngKey::new(seed, [domain, shot, 0, 0]).derive_seed()
}
