use thiserror::Error;

/// Errors raised by the archetype-analysis pipeline.
#[derive(Debug, Error)]
pub enum DaaError {
    #[error("external systems carry trajectories only and have no vector field")]
    ExternalSystemHasNoField,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no closed-form flow for {0}")]
    NoClosedForm(String),
    #[error("composite system needs at least two non-external sub-systems")]
    EmptyComposite,
    #[error("invalid system specification: {0}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("state became non-finite at step {step}")]
    NonFiniteState { step: usize },
    #[error("dimension {dim} has zero spread and cannot be standardized")]
    DegenerateDimension { dim: usize },
    #[error("complexity needs a non-empty point set")]
    EmptyPointSet,
    #[error("loss became non-finite (epoch {epoch:?})")]
    NonFiniteLoss { epoch: Option<usize> },
    #[error("degenerate perturbation lattice: {0}")]
    DegenerateLattice(String),
    #[error("incomplete fit grid, missing pairs: {}", format_pairs(.missing))]
    IncompleteGrid { missing: Vec<(String, String)> },
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("parse error at line {line}, column `{column}`: {message}")]
    ParseError {
        line: usize,
        column: String,
        message: String,
    },
    #[error("trajectory {traj} has {got} samples, expected {expected}")]
    InconsistentTrajectoryLengths {
        traj: usize,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_pairs(pairs: &[(String, String)]) -> String {
    pairs
        .iter()
        .map(|(a, t)| format!("({a}, {t})"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, DaaError>;
