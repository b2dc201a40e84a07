//! Self-contradiction detection in single documents with LLMs.
//!
//! * [`text`]: sentence segmentation, TF-IDF cosine matching, redaction.
//! * [`llm`]: prompt assets, backends (OpenAI-compatible HTTP, replay),
//!   response cache, verdict parsing.
//! * [`pipeline`]: direct prompting, redact-and-retry, and the unconstrained
//!   and constrained evidence filters.
//! * [`metrics`]: per-document evidence scores, dataset aggregates, identity
//!   residuals, filter error analysis.
//! * [`dataset`]: JSONL ingestion and seeded synthetic data with replay
//!   fixtures.
//!
//! Similarity and metric code is generic over [`scalar::Scalar`]; the aliases
//! below fix it to `f64` (and `f32` where useful).

pub mod cli;
pub mod dataset;
pub mod llm;
pub mod metrics;
pub mod pipeline;
pub mod scalar;
pub mod text;

pub use scalar::Scalar;

pub type MatchConfig = text::MatchConfig<f64>;
pub type MatchConfig32 = text::MatchConfig<f32>;
pub type Vectorizer = text::Vectorizer<f64>;
pub type Vectorizer32 = text::Vectorizer<f32>;
pub type TfidfVector = text::TfidfVector<f64>;
pub type RunConfig = pipeline::RunConfig<f64>;
pub type PerDocScore = metrics::PerDocScore<f64>;
pub type PerDocScore32 = metrics::PerDocScore<f32>;
pub type EvaluationReport = metrics::EvaluationReport<f64>;
pub type EvaluationReport32 = metrics::EvaluationReport<f32>;
pub type FilterErrorReport = metrics::FilterErrorReport<f64>;
