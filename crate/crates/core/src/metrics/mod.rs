//! Evidence-extraction metrics: per-document scores, dataset aggregates,
//! identity residuals, filter error analysis and report rendering.

mod aggregate;
mod filter;
mod score;
mod table;

use thiserror::Error;

pub use aggregate::{
    aggregate, verify_identities, Averages, Classification, Counts, EvaluationReport,
    EvidenceMetrics, IdentityResiduals, IDENTITY_TOLERANCE,
};
pub use filter::{
    analyze_transitions, filter_error_analysis, filter_error_analysis_from_trace,
    FilterErrorReport, FilterTransition,
};
pub use score::{effective_evidence, effective_judgement, score_all, score_doc, Outcome, PerDocScore};
pub use table::{column_name, render_filter_table, render_report_table, write_plot_data};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("trace for {trace:?} scored against document {document:?}")]
    Mismatch { document: String, trace: String },
    #[error("cannot aggregate an empty score list")]
    Empty,
    #[error("traces do not align with documents: {0}")]
    Alignment(String),
}
