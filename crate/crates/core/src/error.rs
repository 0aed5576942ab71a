use std::io;

use thiserror::Error;

use crate::config::ConfigError;
use crate::data::DataError;
use crate::metrics::MetricsError;
use crate::model::ModelError;
use crate::selection::SelectionError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error for anything that runs a simulation or a sweep.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("aggregation over models with different specs")]
    SpecMismatch,
    #[error("no summaries to group")]
    EmptyGroup,
    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn in_round(self, round: usize) -> Self {
        match self {
            Error::Round { .. } => self,
            other => Error::Round {
                round,
                source: Box::new(other),
            },
        }
    }

    /// True when the error comes from a bad configuration rather than a
    /// failure while running.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Json(_))
    }
}
