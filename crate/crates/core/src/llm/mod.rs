//! Prompt rendering, model invocation, caching and verdict parsing.

mod backend;
mod cache;
mod client;
mod parse;
mod prompt;

use thiserror::Error;

pub use backend::{
    chat_completions_url, extract_completion, prompt_digest, Backend, BackendConfig, BackendKind,
    HttpBackend, ReplayBackend, ReplayFixture,
};
pub use cache::{cache_key, sha256_hex, CacheMeta, ResponseCache};
pub use client::{FilterOutcome, LlmClient, SharedClient};
pub use parse::{parse_verdict, ParseError, ParseStatus, Verdict};
pub use prompt::{
    render_prompt, render_sentence_list, PromptKind, PromptPayload, DETECT_TEMPLATE,
    FILTER_CONSTRAINED_TEMPLATE, FILTER_UNCONSTRAINED_TEMPLATE,
};

#[derive(Debug, Error)]
pub enum LlmError {
    /// Network or HTTP failure; worth retrying.
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("environment variable {0} is not set; it must hold the API key")]
    MissingApiKey(String),
    /// The replay fixture has no response for this prompt.
    #[error("replay fixture has no entry for prompt digest {digest}")]
    ReplayMiss { digest: String },
    #[error("payload does not fit prompt kind {0:?}")]
    PayloadMismatch(PromptKind),
    #[error("empty input")]
    EmptyInput,
    #[error("fixture error: {0}")]
    Fixture(String),
    #[error("cache error: {0}")]
    Cache(String),
}

impl LlmError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, LlmError::Transport(_))
    }

    /// Errors that should stop a whole run rather than fail one document.
    pub fn is_fatal(&self) -> bool {
        matches!(self, LlmError::Auth(_) | LlmError::MissingApiKey(_))
    }
}
