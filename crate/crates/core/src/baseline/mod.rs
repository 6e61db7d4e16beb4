//! Non-LLM fault localization and candidate-list fusion.

mod fusion;
mod irfl;
mod lift;
mod sbfl;

pub use fusion::{fuse, FusionConfig, AGENT_TECHNIQUE};
pub use irfl::{irfl_score, tokenize, Bm25Params, IRFL_TECHNIQUE};
pub use lift::{lift_statement_ranks, parse_statements, read_statements, StatementRef};
pub use sbfl::{formula_score, sbfl_score, CoverageSpectrum, CoveredTest, Formula, SpectrumCounts, TestOutcome};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("{0}")]
    Precondition(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid file {path}: {message}")]
    Format { path: String, message: String },
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<String, BaselineError> {
    std::fs::read_to_string(path).map_err(|source| BaselineError::Io {
        path: path.display().to_string(),
        source,
    })
}
