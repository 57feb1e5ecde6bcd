use std::fmt;

use thiserror::Error;

/// Which end of a point-to-point query an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Start,
    Goal,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Start => f.write_str("start"),
            Endpoint::Goal => f.write_str("goal"),
        }
    }
}

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Planning,
    Invariant,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty path")]
    EmptyPath,

    #[error("interpolation parameter {0} outside [0, 1]")]
    InterpolationParameter(f64),

    #[error("invalid cost weights: {0}")]
    Weights(String),

    #[error("map format error in field `{field}`: {reason}")]
    MapFormat { field: String, reason: String },

    #[error("invalid environment spec: {0}")]
    EnvSpec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid mission: {0}")]
    Mission(String),

    #[error("{endpoint} state ({x:.3}, {y:.3}, {yaw:.3}) is not valid")]
    InvalidEndpoint {
        endpoint: Endpoint,
        x: f64,
        y: f64,
        yaw: f64,
    },

    #[error("informed region empty")]
    RegionEmpty,

    #[error("ToI has no PoI: {0}")]
    NoPoi(String),

    #[error("exact solver size limit: {n} ToIs exceeds {limit}")]
    ExactSolverLimit { n: usize, limit: usize },

    #[error("disconnected ToI: {0}")]
    Disconnected(String),

    #[error("missing cost for pair {0}")]
    MissingPair(String),

    #[error("planning pair {pair} failed: {source}")]
    Pair {
        pair: String,
        #[source]
        source: Box<Error>,
    },

    #[error("unreachable chain stage {stage}: {from} -> {to}")]
    UnreachableStage {
        stage: usize,
        from: String,
        to: String,
    },

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Disconnected(_) | Error::UnreachableStage { .. } | Error::RegionEmpty => {
                ErrorKind::Planning
            }
            Error::Invariant(_) => ErrorKind::Invariant,
            Error::Pair { source, .. } => source.kind(),
            _ => ErrorKind::Input,
        }
    }

    pub(crate) fn map_field(field: &str, reason: impl Into<String>) -> Self {
        Error::MapFormat {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
