//! Model backends: an OpenAI-compatible HTTP client and a scripted replay
//! table keyed by prompt digest.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::cache::sha256_hex;
use super::LlmError;

/// Something that turns a prompt into a raw text completion.
pub trait Backend: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, LlmError>;
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpOpenAiCompat,
    ScriptedReplay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub model_name: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_endpoint")]
    pub endpoint_url: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_parse_retries")]
    pub max_parse_retries: u32,
    #[serde(default = "default_transport_retries")]
    pub max_transport_retries: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub cache_dir: Option<std::path::PathBuf>,
}

fn default_endpoint() -> String {
    "https://api.openai.com/v1".into()
}
fn default_api_key_env() -> String {
    "OPENAI_API_KEY".into()
}
fn default_timeout() -> f64 {
    120.0
}
fn default_parse_retries() -> u32 {
    2
}
fn default_transport_retries() -> u32 {
    3
}
fn default_in_flight() -> usize {
    4
}

impl BackendConfig {
    pub fn replay(model_name: impl Into<String>) -> Self {
        Self::new(BackendKind::ScriptedReplay, model_name)
    }

    pub fn http(model_name: impl Into<String>) -> Self {
        Self::new(BackendKind::HttpOpenAiCompat, model_name)
    }

    fn new(kind: BackendKind, model_name: impl Into<String>) -> Self {
        Self {
            kind,
            model_name: model_name.into(),
            temperature: 0.0,
            endpoint_url: default_endpoint(),
            api_key_env: default_api_key_env(),
            timeout_s: default_timeout(),
            max_parse_retries: default_parse_retries(),
            max_transport_retries: default_transport_retries(),
            max_in_flight: default_in_flight(),
            cache_dir: None,
        }
    }

    /// Digest of the fields that affect model output, recorded in traces.
    pub fn digest(&self) -> String {
        let v = json!({
            "kind": self.kind,
            "model_name": self.model_name,
            "temperature": self.temperature,
            "endpoint_url": match self.kind {
                BackendKind::HttpOpenAiCompat => Some(&self.endpoint_url),
                BackendKind::ScriptedReplay => None,
            },
            "max_parse_retries": self.max_parse_retries,
        });
        sha256_hex(v.to_string().as_bytes())
    }
}

/// Digest a prompt the way replay fixtures key it.
pub fn prompt_digest(prompt: &str) -> String {
    sha256_hex(prompt.as_bytes())
}

/// Replay fixture: prompt digest → raw response. Serialized as a JSON object
/// with sorted keys.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReplayFixture(pub BTreeMap<String, String>);

impl ReplayFixture {
    pub fn insert(&mut self, prompt: &str, response: impl Into<String>) {
        self.0.insert(prompt_digest(prompt), response.into());
    }

    pub fn get(&self, prompt: &str) -> Option<&str> {
        self.0.get(&prompt_digest(prompt)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn merge(&mut self, other: ReplayFixture) {
        self.0.extend(other.0);
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let bytes = fs::read(path).map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))?;
        serde_json::from_slice(&bytes).map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fixture serializes");
        s.push('\n');
        s
    }
}

/// Deterministic backend answering from a [`ReplayFixture`].
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    fixture: ReplayFixture,
}

impl ReplayBackend {
    pub fn new(fixture: ReplayFixture) -> Self {
        Self { fixture }
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        self.fixture
            .get(prompt)
            .map(str::to_string)
            .ok_or_else(|| LlmError::ReplayMiss {
                digest: prompt_digest(prompt),
            })
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct InFlight {
    slots: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn new(n: usize) -> Self {
        Self {
            slots: Mutex::new(n.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> InFlightGuard<'_> {
        let mut slots = self.slots.lock().expect("semaphore poisoned");
        while *slots == 0 {
            slots = self.freed.wait(slots).expect("semaphore poisoned");
        }
        *slots -= 1;
        InFlightGuard { owner: self }
    }
}

struct InFlightGuard<'a> {
    owner: &'a InFlight,
}

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.owner.slots.lock().expect("semaphore poisoned") += 1;
        self.owner.freed.notify_one();
    }
}

/// Chat-completions client for OpenAI-compatible servers. Each prompt is sent
/// as a single user message.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    url: String,
    api_key: String,
    model: String,
    temperature: f64,
    max_retries: u32,
    in_flight: InFlight,
}

impl HttpBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, LlmError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| LlmError::MissingApiKey(config.api_key_env.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_s.max(0.001)))
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            url: chat_completions_url(&config.endpoint_url),
            api_key,
            model: config.model_name.clone(),
            temperature: config.temperature,
            max_retries: config.max_transport_retries,
            in_flight: InFlight::new(config.max_in_flight),
        })
    }

    fn request_once(&self, prompt: &str) -> Result<String, LlmError> {
        let _slot = self.in_flight.acquire();
        let body = json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let resp = self
            .client
            .post(&self.url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| LlmError::Transport(e.to_string()))?;
        if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
            return Err(LlmError::Auth(format!("{status}: {text}")));
        }
        if !status.is_success() {
            return Err(LlmError::Transport(format!("{status}: {text}")));
        }
        extract_completion(&text)
    }
}

impl Backend for HttpBackend {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let mut attempt = 0;
        loop {
            match self.request_once(prompt) {
                Err(LlmError::Transport(msg)) if attempt < self.max_retries => {
                    log::warn!("transport error (attempt {}): {msg}", attempt + 1);
                    thread::sleep(Duration::from_millis(500 << attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

pub fn chat_completions_url(endpoint: &str) -> String {
    let base = endpoint.trim_end_matches('/');
    if base.ends_with("/chat/completions") {
        base.to_string()
    } else {
        format!("{base}/chat/completions")
    }
}

/// Pull `choices[0].message.content` out of a chat-completions response body.
pub fn extract_completion(body: &str) -> Result<String, LlmError> {
    let v: serde_json::Value =
        serde_json::from_str(body).map_err(|e| LlmError::Transport(format!("invalid response body: {e}")))?;
    v.pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| LlmError::Transport("response has no choices[0].message.content".into()))
}
