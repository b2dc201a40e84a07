//! Per-document prediction: direct prompting, redact-and-retry, and
//! redact-and-retry with an evidence filter.

mod run;
mod trace;

use thiserror::Error;

pub use run::{
    run_dataset, run_document, run_dp, run_rnr, run_rnr_filtered, RunConfig, DEFAULT_MAX_ROUNDS,
};
pub use trace::{
    read_traces, union_evidence, Approach, FilterStage, PredictionTrace, Round, StopReason,
    TraceError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("trace file line {line}: {message}")]
    TraceFormat { line: usize, message: String },
}
