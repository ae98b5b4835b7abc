//! Command-line flags and their validation.

use std::collections::BTreeMap;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mkc_core::experiments::Context;
use mkc_core::pom::Protocol;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("{0}")]
pub struct ConfigError(pub String);

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Two-qubit preparations for the square experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TwoQubitState {
    /// I/4.
    Mixed,
    /// |0> ⊗ |+>.
    ZeroPlus,
    /// (|00> + |11>)/√2.
    Bell,
}

#[derive(Debug, Parser)]
#[command(name = "mkc-lab", version, about = "Run hidden-variable model experiments and the acceptance suite")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Number of shots (samples) per experiment.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub shots: u64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Precision radius used when minting catalog bases.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Worker threads; defaults to one per core. Output does not depend on it.
    #[arg(long, global = true)]
    pub parallel: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One context of the square per shot, on fresh systems.
    CabelloSingle(StateArgs),
    /// Several contexts in sequence on the same system.
    CabelloSequential(SequentialArgs),
    /// CHSH correlators under the event-triggered toy dynamics.
    ChshToy,
    /// Exhaustive check that the square admits no ±1 assignment.
    KsCheck,
    /// Exhaustive classical maximum of the Cabello sum.
    ClassicalBound,
    /// Joint coloring statistics of a state versus a mixture of measures.
    Mixture(MixtureArgs),
    /// Qubit parity-oblivious multiplexing.
    PomQuantum(PomQuantumArgs),
    /// Hidden-bit table multiplexing, optionally boxed.
    PomClassical(PomClassicalArgs),
    /// Input bits stored directly in the booby-trapped box.
    PomBox,
    /// Best parity decoder for one protocol.
    PomAudit(PomAuditArgs),
    /// Every acceptance criterion with its tolerance.
    Acceptance,
}

#[derive(Debug, Args)]
pub struct StateArgs {
    #[arg(long, value_enum, default_value_t = TwoQubitState::Mixed)]
    pub state: TwoQubitState,
}

#[derive(Debug, Args)]
pub struct SequentialArgs {
    #[arg(long, value_enum, default_value_t = TwoQubitState::Mixed)]
    pub state: TwoQubitState,
    /// Comma-separated contexts, e.g. R1,C1,R2,R3,C2,C3.
    #[arg(long, value_delimiter = ',', value_parser = parse_context)]
    pub order: Option<Vec<Context>>,
    /// Refresh the coloring instead of collapsing after each context.
    #[arg(long)]
    pub no_collapse: bool,
}

#[derive(Debug, Args)]
pub struct MixtureArgs {
    /// Tr(P1 P2) for P1 = |0><0| and a second pure projector.
    #[arg(long, default_value_t = 0.5)]
    pub overlap: f64,
}

#[derive(Debug, Args)]
pub struct PomQuantumArgs {
    /// Measure through the hidden-variable model instead of Born sampling.
    #[arg(long)]
    pub via_mkc: bool,
}

#[derive(Debug, Args)]
pub struct PomClassicalArgs {
    /// Send the hidden bits in the booby-trapped box.
    #[arg(long)]
    pub boxed: bool,
}

#[derive(Debug, Args)]
pub struct PomAuditArgs {
    /// quantum, quantum-mkc, classical-table, classical-boxed or direct-box.
    #[arg(long, default_value = "quantum")]
    pub protocol: String,
}

fn parse_context(s: &str) -> Result<Context, String> {
    Context::ALL
        .into_iter()
        .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
        .ok_or_else(|| format!("unknown context {s:?}; expected one of R1 R2 R3 C1 C2 C3"))
}

/// A validated experiment request.
#[derive(Clone, Debug, PartialEq)]
pub enum Experiment {
    CabelloSingle { state: TwoQubitState },
    CabelloSequential { state: TwoQubitState, order: Vec<Context>, collapse: bool },
    ChshToy,
    KsCheck,
    ClassicalBound,
    Mixture { overlap: f64 },
    PomQuantum { via_mkc: bool },
    PomClassical { boxed: bool },
    PomBox,
    PomAudit { protocol: Protocol },
    Acceptance,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::CabelloSingle { .. } => "cabello-single",
            Experiment::CabelloSequential { .. } => "cabello-sequential",
            Experiment::ChshToy => "chsh-toy",
            Experiment::KsCheck => "ks-check",
            Experiment::ClassicalBound => "classical-bound",
            Experiment::Mixture { .. } => "mixture",
            Experiment::PomQuantum { .. } => "pom-quantum",
            Experiment::PomClassical { .. } => "pom-classical",
            Experiment::PomBox => "pom-box",
            Experiment::PomAudit { .. } => "pom-audit",
            Experiment::Acceptance => "acceptance",
        }
    }

    /// Smallest shot count the experiment can summarize.
    fn min_shots(&self) -> u64 {
        match self {
            Experiment::CabelloSingle { .. } | Experiment::CabelloSequential { .. } | Experiment::ChshToy => 1,
            Experiment::KsCheck | Experiment::ClassicalBound | Experiment::Acceptance => 0,
            _ => 2,
        }
    }

    fn options(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let state_name = |s: &TwoQubitState| s.to_possible_value().expect("no skipped variants").get_name().to_owned();
        match self {
            Experiment::CabelloSingle { state } => {
                m.insert("state".into(), state_name(state));
            }
            Experiment::CabelloSequential { state, order, collapse } => {
                m.insert("state".into(), state_name(state));
                m.insert("order".into(), order.iter().map(|c| c.name()).collect::<Vec<_>>().join(","));
                m.insert("collapse".into(), collapse.to_string());
            }
            Experiment::Mixture { overlap } => {
                m.insert("overlap".into(), overlap.to_string());
            }
            Experiment::PomQuantum { via_mkc } => {
                m.insert("via_mkc".into(), via_mkc.to_string());
            }
            Experiment::PomClassical { boxed } => {
                m.insert("boxed".into(), boxed.to_string());
            }
            Experiment::PomAudit { protocol } => {
                m.insert("protocol".into(), protocol.name().into());
            }
            Experiment::Acceptance => {
                m.insert("shots".into(), "fixed per criterion".into());
            }
            _ => {}
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub shots: u64,
    pub seed: u64,
    pub epsilon: f64,
    pub format: Format,
    pub parallel: Option<usize>,
}

/// The part of a [`RunConfig`] that is echoed in reports. The pool size is
/// left out because it never changes results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub experiment: String,
    pub shots: u64,
    pub seed: u64,
    pub epsilon: f64,
    pub options: BTreeMap<String, String>,
}

impl RunConfig {
    /// Parses `argv` (including the program name). Errors carry clap's usage
    /// text.
    pub fn parse_from<I, T>(argv: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let cli = Cli::try_parse_from(argv)?;
        Self::try_from(cli).map_err(|e| {
            use clap::CommandFactory;
            Cli::command().error(clap::error::ErrorKind::ValueValidation, e.0)
        })
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            experiment: self.experiment.name().into(),
            shots: self.shots,
            seed: self.seed,
            epsilon: self.epsilon,
            options: self.experiment.options(),
        }
    }
}

impl TryFrom<Cli> for RunConfig {
    type Error = ConfigError;

    fn try_from(cli: Cli) -> Result<Self, ConfigError> {
        let experiment = match cli.command {
            Command::CabelloSingle(a) => Experiment::CabelloSingle { state: a.state },
            Command::CabelloSequential(a) => {
                let order = a.order.unwrap_or_else(|| mkc_core::experiments::SequentialOptions::default().order);
                if !order.contains(&Context::R1) || !order.contains(&Context::C1) {
                    return Err(ConfigError("--order must include R1 and C1".into()));
                }
                Experiment::CabelloSequential { state: a.state, order, collapse: !a.no_collapse }
            }
            Command::ChshToy => Experiment::ChshToy,
            Command::KsCheck => Experiment::KsCheck,
            Command::ClassicalBound => Experiment::ClassicalBound,
            Command::Mixture(a) => {
                if !(a.overlap > 0.0 && a.overlap < 1.0) {
                    return Err(ConfigError(format!(
                        "--overlap must lie strictly between 0 and 1 (got {})",
                        a.overlap
                    )));
                }
                Experiment::Mixture { overlap: a.overlap }
            }
            Command::PomQuantum(a) => Experiment::PomQuantum { via_mkc: a.via_mkc },
            Command::PomClassical(a) => Experiment::PomClassical { boxed: a.boxed },
            Command::PomBox => Experiment::PomBox,
            Command::PomAudit(a) => Experiment::PomAudit {
                protocol: Protocol::from_name(&a.protocol).map_err(|e| ConfigError(e.to_string()))?,
            },
            Command::Acceptance => Experiment::Acceptance,
        };
        if cli.shots < experiment.min_shots() {
            return Err(ConfigError(format!(
                "{} needs --shots of at least {}",
                experiment.name(),
                experiment.min_shots()
            )));
        }
        if !(cli.epsilon > 0.0 && cli.epsilon <= 0.1) {
            return Err(ConfigError(format!("--epsilon must be in (0, 0.1] (got {})", cli.epsilon)));
        }
        if cli.parallel == Some(0) {
            return Err(ConfigError("--parallel must be at least 1".into()));
        }
        Ok(Self {
            experiment,
            shots: cli.shots,
            seed: cli.seed,
            epsilon: cli.epsilon,
            format: cli.format,
            parallel: cli.parallel,
        })
    }
}
