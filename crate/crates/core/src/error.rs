use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported dimension {0} (supported: 2..=9)")]
    UnsupportedDimension(usize),
    #[error("catalog saturated: {attempts} consecutive perturbations failed the total-incompatibility check")]
    CatalogSaturated { attempts: usize },
    #[error("impossible outcome: Born weight {weight:e} of the observed eigenspace is below 1e-15")]
    ImpossibleOutcome { weight: f64 },
    #[error("insufficient data for `{variable}`: {count} samples, need at least 2")]
    InsufficientData { variable: String, count: u64 },
    #[error("booby trap: compartment {destroyed} was destroyed when compartment {opened} was opened")]
    BoobyTrap { opened: usize, destroyed: usize },
    #[error("unknown protocol `{0}`")]
    UnknownProtocol(String),
}
