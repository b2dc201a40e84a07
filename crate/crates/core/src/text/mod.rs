//! Sentence handling: segmentation, TF-IDF similarity, matching and
//! redaction.

mod document;
mod matching;
mod segment;
mod tfidf;

use thiserror::Error;

pub use document::{
    join_sentences, sentences_from_texts, ContradictionType, Document, DocumentError, Label,
    Sentence,
};
pub use matching::{
    best_similarity, has_match, redact, redact_counted, IdfScheme, MatchConfig, Norm, Redaction,
    Tokenizer,
};
pub use segment::{segment_sentences, ABBREVIATIONS};
pub use tfidf::{cosine_similarity, tokenize, TfidfVector, Vectorizer};

#[derive(Debug, Error, PartialEq)]
pub enum TextError {
    #[error("cannot fit a vectorizer on an empty corpus")]
    EmptyCorpus,
    #[error("cosine threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
}
