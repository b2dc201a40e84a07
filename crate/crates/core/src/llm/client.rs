use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::text::{best_similarity, MatchConfig};

use super::backend::{Backend, BackendConfig, BackendKind, HttpBackend, ReplayBackend, ReplayFixture};
use super::cache::{cache_key, ResponseCache};
use super::parse::{parse_verdict, ParseStatus, Verdict};
use super::prompt::{render_prompt, PromptKind, PromptPayload};
use super::LlmError;

/// Outcome of one filter call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterOutcome {
    /// Selected sentences, each one of the input sentences.
    pub evidence: Vec<String>,
    pub raw_response: String,
    pub parse_status: ParseStatus,
    /// True when the input list was passed through unchanged because the
    /// model produced nothing usable.
    pub fallback: bool,
}

/// A backend plus optional response cache and the retry policy.
pub struct LlmClient {
    backend: Box<dyn Backend>,
    cache: Option<ResponseCache>,
    config: BackendConfig,
    backend_calls: AtomicU64,
}

impl LlmClient {
    pub fn new(config: BackendConfig, backend: Box<dyn Backend>) -> Result<Self, LlmError> {
        let cache = config.cache_dir.as_ref().map(ResponseCache::open).transpose()?;
        Ok(Self {
            backend,
            cache,
            config,
            backend_calls: AtomicU64::new(0),
        })
    }

    /// Build the backend named by `config.kind`. Replay needs a fixture.
    pub fn from_config(config: BackendConfig, fixture: Option<ReplayFixture>) -> Result<Self, LlmError> {
        let backend: Box<dyn Backend> = match config.kind {
            BackendKind::HttpOpenAiCompat => Box::new(HttpBackend::new(&config)?),
            BackendKind::ScriptedReplay => Box::new(ReplayBackend::new(
                fixture.ok_or_else(|| LlmError::Fixture("replay backend requires a fixture".into()))?,
            )),
        };
        Self::new(config, backend)
    }

    pub fn replay(config: BackendConfig, fixture: ReplayFixture) -> Self {
        Self::new(config, Box::new(ReplayBackend::new(fixture))).expect("no cache dir to open")
    }

    pub fn with_backend<B: Backend + 'static>(config: BackendConfig, backend: B) -> Self {
        Self {
            backend: Box::new(backend),
            cache: None,
            config,
            backend_calls: AtomicU64::new(0),
        }
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    /// Number of requests that actually reached the backend.
    pub fn backend_calls(&self) -> u64 {
        self.backend_calls.load(Ordering::Relaxed)
    }

    fn call_backend(&self, prompt: &str) -> Result<String, LlmError> {
        self.backend_calls.fetch_add(1, Ordering::Relaxed);
        self.backend.complete(prompt)
    }

    /// Raw completion, served from the cache when possible.
    pub fn invoke(&self, prompt: &str) -> Result<String, LlmError> {
        let Some(cache) = &self.cache else {
            return self.call_backend(prompt);
        };
        let key = cache_key(&self.config.model_name, self.config.temperature, prompt);
        if let Some(hit) = cache.load(&key) {
            return Ok(hit);
        }
        let resp = self.call_backend(prompt)?;
        cache.store(&key, &resp, &self.config.model_name, self.config.temperature)?;
        Ok(resp)
    }

    /// Raw completion that never reads or writes the cache.
    pub fn invoke_uncached(&self, prompt: &str) -> Result<String, LlmError> {
        self.call_backend(prompt)
    }

    /// Render, invoke, parse; re-invoke on parse failure, then fall back to
    /// `(No, [])` marked failed.
    pub fn detect(&self, document_text: &str) -> Result<Verdict, LlmError> {
        if document_text.trim().is_empty() {
            return Err(LlmError::EmptyInput);
        }
        let prompt = render_prompt(PromptKind::Detect, PromptPayload::Document(document_text))?;
        let mut raw = self.invoke(&prompt)?;
        for attempt in 0..=self.config.max_parse_retries {
            match parse_verdict(&raw, PromptKind::Detect) {
                Ok(v) => return Ok(v),
                Err(e) => {
                    log::debug!("detect parse failure (attempt {}): {e}", attempt + 1);
                    if attempt < self.config.max_parse_retries {
                        raw = self.invoke_uncached(&prompt)?;
                    }
                }
            }
        }
        Ok(Verdict::fallback(raw))
    }

    /// Ask the model which of `sentences` are truly inconsistent.
    ///
    /// Returned sentences are snapped onto the inputs by approximate match
    /// and anything matching no input is dropped. Constrained mode
    /// re-invokes on an empty selection and finally passes the input
    /// through; so does either mode after repeated parse failures.
    pub fn filter_evidence<T: Scalar>(
        &self,
        sentences: &[String],
        constrained: bool,
        matching: &MatchConfig<T>,
    ) -> Result<FilterOutcome, LlmError> {
        if sentences.is_empty() {
            return Err(LlmError::EmptyInput);
        }
        let kind = PromptKind::filter(constrained);
        let prompt = render_prompt(kind, PromptPayload::Sentences(sentences))?;
        let mut raw = self.invoke(&prompt)?;
        let mut last_status = ParseStatus::Failed;
        for attempt in 0..=self.config.max_parse_retries {
            match parse_verdict(&raw, kind) {
                Ok(v) => {
                    let selected = snap_to_inputs(&v.evidence, sentences, matching);
                    if !selected.is_empty() || !constrained {
                        return Ok(FilterOutcome {
                            evidence: selected,
                            raw_response: raw,
                            parse_status: v.parse_status,
                            fallback: false,
                        });
                    }
                    last_status = v.parse_status;
                }
                Err(e) => {
                    log::debug!("filter parse failure (attempt {}): {e}", attempt + 1);
                    last_status = ParseStatus::Failed;
                }
            }
            if attempt < self.config.max_parse_retries {
                raw = self.invoke_uncached(&prompt)?;
            }
        }
        Ok(FilterOutcome {
            evidence: sentences.to_vec(),
            raw_response: raw,
            parse_status: last_status,
            fallback: true,
        })
    }
}

impl<T: Backend + ?Sized> Backend for Box<T> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

impl Backend for LlmClient {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        self.invoke(prompt)
    }
}

/// Shared handle, for callers that hand the client to several workers.
pub type SharedClient = Arc<LlmClient>;

fn snap_to_inputs<T: Scalar>(selected: &[String], inputs: &[String], matching: &MatchConfig<T>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in selected {
        let hit = if inputs.contains(s) {
            Some(s.clone())
        } else {
            best_similarity::<T, _>(s, inputs)
                .filter(|&(_, sim)| sim >= matching.cosine_threshold)
                .map(|(i, _)| inputs[i].clone())
        };
        if let Some(h) = hit {
            if !out.contains(&h) {
                out.push(h);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::Label;
    use std::sync::Mutex;

    /// Answers from a queue, counting calls.
    struct Queue(Mutex<Vec<String>>);

    impl Queue {
        fn new(items: &[&str]) -> Self {
            Self(Mutex::new(items.iter().rev().map(|s| s.to_string()).collect()))
        }
    }

    impl Backend for Queue {
        fn complete(&self, _prompt: &str) -> Result<String, LlmError> {
            self.0
                .lock()
                .unwrap()
                .pop()
                .ok_or_else(|| LlmError::Transport("queue drained".into()))
        }
    }

    fn client(items: &[&str]) -> LlmClient {
        LlmClient::with_backend(BackendConfig::replay("m"), Queue::new(items))
    }

    fn m() -> MatchConfig<f64> {
        MatchConfig::default()
    }

    #[test]
    fn detect_parses_reply() {
        let c = client(&[r#"{"judgement": "yes", "evidence": ["s2"]}"#]);
        let v = c.detect("s1. s2.").unwrap();
        assert_eq!((v.judgement, v.evidence.clone()), (Label::Yes, vec!["s2".to_string()]));
    }

    #[test]
    fn detect_retries_then_falls_back() {
        let c = client(&["garbage", "still garbage", "nope"]);
        let v = c.detect("doc").unwrap();
        assert_eq!(v.parse_status, ParseStatus::Failed);
        assert_eq!(v.judgement, Label::No);
        assert!(v.evidence.is_empty());
        assert_eq!(c.backend_calls(), 3);

        let c = client(&["garbage", r#"{"judgement": "no", "evidence": []}"#]);
        assert_eq!(c.detect("doc").unwrap().parse_status, ParseStatus::Clean);
        assert_eq!(c.backend_calls(), 2);
    }

    #[test]
    fn detect_rejects_empty_document() {
        assert!(matches!(client(&[]).detect("  "), Err(LlmError::EmptyInput)));
    }

    #[test]
    fn constrained_filter_falls_back_to_input() {
        let empty = r#"{"evidence": []}"#;
        let c = client(&[empty, empty, empty]);
        let input = vec!["A cat.".to_string(), "A dog.".to_string()];
        let out = c.filter_evidence(&input, true, &m()).unwrap();
        assert!(out.fallback);
        assert_eq!(out.evidence, input);
        assert_eq!(c.backend_calls(), 3);
    }

    #[test]
    fn unconstrained_filter_may_return_empty() {
        let c = client(&[r#"{"evidence": []}"#]);
        let out = c.filter_evidence(&["A cat.".to_string()], false, &m()).unwrap();
        assert!(out.evidence.is_empty());
        assert!(!out.fallback);
    }

    #[test]
    fn filter_output_snaps_onto_inputs() {
        let c = client(&[r#"{"evidence": ["the red car was fast", "unrelated words"]}"#]);
        let input = vec!["The red car was fast.".to_string(), "Birds sing.".to_string()];
        let out = c.filter_evidence(&input, false, &m()).unwrap();
        assert_eq!(out.evidence, vec!["The red car was fast.".to_string()]);
    }

    #[test]
    fn cache_serves_repeat_calls() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = BackendConfig::replay("m");
        cfg.cache_dir = Some(dir.path().to_path_buf());
        let c = LlmClient::new(cfg, Box::new(Queue::new(&["first"]))).unwrap();
        assert_eq!(c.invoke("p").unwrap(), "first");
        assert_eq!(c.invoke("p").unwrap(), "first");
        assert_eq!(c.backend_calls(), 1);
    }
}
