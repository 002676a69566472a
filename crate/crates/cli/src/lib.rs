//! Experiment runner behind the `equidistlab` binary.

pub mod config;
pub mod run;
pub mod selftest;

use equidistlab::equidist::EquidistError;
use equidistlab::orbits::OrbitError;
use equidistlab::source::GroupError;
use equidistlab::target::TargetError;
use equidistlab::PolyError;
use thiserror::Error;

pub use config::{Command, ExperimentConfig};
pub use run::{run_experiment, write_outputs, ExitStatus, RunOptions, RunReport, SCHEMA};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("{0}")]
    Failed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        match self {
            Self::Budget(_) => ExitStatus::Budget,
            Self::Config(_) | Self::Failed(_) | Self::Io(_) => ExitStatus::Usage,
        }
    }
}

fn group_is_budget(e: &GroupError) -> bool {
    matches!(e, GroupError::BudgetExceeded { .. })
}

fn target_is_budget(e: &TargetError) -> bool {
    matches!(e, TargetError::TooLarge { .. })
}

fn poly_is_budget(e: &PolyError) -> bool {
    match e {
        PolyError::Source(g) => group_is_budget(g),
        PolyError::Target(t) => target_is_budget(t),
        PolyError::StabilizationExhausted { .. } => true,
        _ => false,
    }
}

fn equidist_is_budget(e: &EquidistError) -> bool {
    match e {
        EquidistError::Poly(p) => poly_is_budget(p),
        EquidistError::Source(g) => group_is_budget(g),
        EquidistError::Target(t) => target_is_budget(t),
        EquidistError::TooManyCharacters { .. } => true,
        _ => false,
    }
}

fn orbit_is_budget(e: &OrbitError) -> bool {
    match e {
        OrbitError::Poly(p) => poly_is_budget(p),
        OrbitError::Equidist(q) => equidist_is_budget(q),
        OrbitError::Source(g) => group_is_budget(g),
        OrbitError::Target(t) => target_is_budget(t),
        _ => false,
    }
}

fn classify(message: String, budget: bool) -> CliError {
    if budget {
        CliError::Budget(message)
    } else {
        CliError::Failed(message)
    }
}

impl From<PolyError> for CliError {
    fn from(e: PolyError) -> Self {
        classify(e.to_string(), poly_is_budget(&e))
    }
}

impl From<EquidistError> for CliError {
    fn from(e: EquidistError) -> Self {
        classify(e.to_string(), equidist_is_budget(&e))
    }
}

impl From<OrbitError> for CliError {
    fn from(e: OrbitError) -> Self {
        classify(e.to_string(), orbit_is_budget(&e))
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        classify(e.to_string(), group_is_budget(&e))
    }
}

impl From<TargetError> for CliError {
    fn from(e: TargetError) -> Self {
        classify(e.to_string(), target_is_budget(&e))
    }
}
