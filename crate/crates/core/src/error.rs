use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {n} is not an even integer >= 16")]
    InvalidGrid { n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error("curve is not star-shaped: [C, C_p] changes sign or vanishes near node {node}")]
    NotStarShaped { node: usize },

    #[error("curve is not convex: [C_p, C_pp] changes sign or vanishes near node {node}")]
    NotConvex { node: usize },

    #[error("degenerate metric at node {node} (value {value:e})")]
    DegenerateMetric { node: usize, value: f64 },

    #[error("sign of [C_p, C_pp]/[C, C_p] is not constant over the grid")]
    NonConstantSign,

    #[error("time step {dt:e} exceeds the stability bound {dt_max:e}")]
    StabilityViolation { dt: f64, dt_max: f64 },

    #[error("blow-up: {quantity} reached {value:e} (ceiling {ceiling:e})")]
    BlowUp {
        quantity: &'static str,
        value: f64,
        ceiling: f64,
    },

    #[error("need at least {needed} records for centered differencing, got {got}")]
    InsufficientStride { needed: usize, got: usize },

    #[error("flow failed at t = {t}: {source}")]
    FlowFailure {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Short variant name used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid { .. } => "InvalidGrid",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::NonFinite { .. } => "NonFinite",
            Error::NotStarShaped { .. } => "NotStarShaped",
            Error::NotConvex { .. } => "NotConvex",
            Error::DegenerateMetric { .. } => "DegenerateMetric",
            Error::NonConstantSign => "NonConstantSign",
            Error::StabilityViolation { .. } => "StabilityViolation",
            Error::BlowUp { .. } => "BlowUp",
            Error::InsufficientStride { .. } => "InsufficientStride",
            Error::FlowFailure { source, .. } => source.kind(),
            Error::Io { .. } => "Io",
            Error::Json { .. } => "Json",
            Error::Config(_) => "Config",
        }
    }

    pub(crate) fn at_time(self, t: f64) -> Error {
        match self {
            e @ Error::FlowFailure { .. } => e,
            e => Error::FlowFailure {
                t,
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
