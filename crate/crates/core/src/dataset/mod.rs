//! Dataset ingestion, serialization and synthetic generation.

mod convert;
mod load;
mod synth;

use thiserror::Error;

pub use convert::{convert_value, parse_type, FieldMapping};
pub use load::{load, parse_dataset, to_jsonl, write_jsonl, DatasetRecord, DatasetSummary};
pub use synth::{
    generate_documents, generate_synthetic, synthetic_backend_config, RecordingBackend,
    ScriptedModel, SynthBehavior, SynthDataset, SynthSpec,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("line {line}: invalid JSON: {message}")]
    Json { line: usize, message: String },
    #[error("record {record:?}, field {field:?}: {message}")]
    Schema {
        record: String,
        field: String,
        message: String,
    },
    #[error("record {record:?}: evidence {evidence:?} does not exactly equal any sentence")]
    EvidenceMismatch { record: String, evidence: String },
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
}
