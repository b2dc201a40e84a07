//! Seeded synthetic datasets plus a scripted model whose answers are
//! recorded into a replay fixture, so the whole pipeline runs offline.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::llm::{
    Backend, BackendConfig, LlmClient, LlmError, ReplayFixture, DETECT_TEMPLATE,
    FILTER_CONSTRAINED_TEMPLATE, FILTER_UNCONSTRAINED_TEMPLATE,
};
use crate::pipeline::{run_dataset, Approach, RunConfig};
use crate::text::{has_match, segment_sentences, sentences_from_texts, tokenize, ContradictionType, Document, Label, MatchConfig};

/// How the scripted model behaves. All values are probabilities except
/// `max_removals`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthBehavior {
    /// Chance a positive document is flagged in round 1.
    pub detect_rate: f64,
    /// Chance a negative document is flagged in round 1.
    pub false_positive_rate: f64,
    /// Per-round chance of quoting the gold sentence when it is still present.
    pub hit_rate: f64,
    /// Chance of adding one more (non-gold) sentence to the evidence.
    pub extra_evidence_rate: f64,
    /// Upper bound on sentences a flagged document loses before the model
    /// starts answering No.
    pub max_removals: usize,
    /// Chance an evidence sentence is quoted inexactly.
    pub paraphrase_rate: f64,
    /// Chance a response is wrapped in a markdown code fence.
    pub fence_rate: f64,
    /// Chance a detect response is not JSON at all.
    pub garbage_rate: f64,
    /// Filter: chance of keeping a gold-matching sentence.
    pub filter_keep_true_rate: f64,
    /// Filter: chance of keeping any other sentence.
    pub filter_keep_other_rate: f64,
    /// Constrained filter: chance of ignoring the constraint and answering [].
    pub constrained_empty_rate: f64,
}

impl Default for SynthBehavior {
    fn default() -> Self {
        Self {
            detect_rate: 0.75,
            false_positive_rate: 0.35,
            hit_rate: 0.7,
            extra_evidence_rate: 0.5,
            max_removals: 4,
            paraphrase_rate: 0.2,
            fence_rate: 0.1,
            garbage_rate: 0.02,
            filter_keep_true_rate: 0.85,
            filter_keep_other_rate: 0.35,
            constrained_empty_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub vocabulary_size: usize,
    pub behavior: SynthBehavior,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            n_pos: 10,
            n_neg: 10,
            min_sentences: 4,
            max_sentences: 12,
            vocabulary_size: 300,
            behavior: SynthBehavior::default(),
        }
    }
}

impl SynthSpec {
    pub fn new(seed: u64, n_pos: usize, n_neg: usize) -> Self {
        Self {
            seed,
            n_pos,
            n_neg,
            ..Self::default()
        }
    }
}

pub struct SynthDataset {
    pub documents: Vec<Document>,
    pub fixture: ReplayFixture,
}

const MODEL_NAME: &str = "synthetic";

/// Backend config matching the recorded fixture.
pub fn synthetic_backend_config() -> BackendConfig {
    BackendConfig::replay(MODEL_NAME)
}

const ONSETS: [&str; 14] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Deterministic pseudo-word; distinct for distinct `i`, never shorter than
/// two syllables.
fn word(mut i: usize) -> String {
    let base = ONSETS.len() * VOWELS.len();
    let mut out = String::new();
    let mut syllables = 0;
    while syllables < 2 || i > 0 {
        let s = i % base;
        out.push_str(ONSETS[s / VOWELS.len()]);
        out.push_str(VOWELS[s % VOWELS.len()]);
        i /= base;
        syllables += 1;
    }
    out
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

fn seeded(seed: u64, tag: &str, text: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    h.update([0u8]);
    h.update(text.as_bytes());
    let d = h.finalize();
    ChaCha8Rng::seed_from_u64(u64::from_le_bytes(d[..8].try_into().expect("8 bytes")))
}

/// Documents only; a pure function of the spec.
pub fn generate_documents(spec: &SynthSpec) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vocab: Vec<String> = (0..spec.vocabulary_size.max(8)).map(word).collect();
    let lo = spec.min_sentences.max(1);
    let hi = spec.max_sentences.max(lo);
    let mut used = std::collections::HashSet::new();
    let mut docs = Vec::with_capacity(spec.n_pos + spec.n_neg);

    // Interleave positives and negatives so prefixes stay balanced.
    let mut labels: Vec<Label> = Vec::new();
    let (mut p, mut n) = (spec.n_pos, spec.n_neg);
    while p + n > 0 {
        if p > 0 && (n == 0 || rng.random_bool(p as f64 / (p + n) as f64)) {
            labels.push(Label::Yes);
            p -= 1;
        } else {
            labels.push(Label::No);
            n -= 1;
        }
    }

    for (i, label) in labels.into_iter().enumerate() {
        let count = rng.random_range(lo..=hi);
        let mut texts = Vec::with_capacity(count);
        while texts.len() < count {
            let len = rng.random_range(6..=10);
            let words: Vec<&str> = (0..len).map(|_| vocab.choose(&mut rng).expect("vocab").as_str()).collect();
            let s = format!("{}.", capitalize(&words.join(" ")));
            if used.insert(s.clone()) {
                texts.push(s);
            }
        }
        let id = format!("synth-{:04}", i);
        let doc = if label.is_yes() {
            let g = rng.random_range(0..count);
            let t = ContradictionType::ALL[rng.random_range(0..ContradictionType::ALL.len())];
            Document::new(id, sentences_from_texts(&texts), Label::Yes, vec![texts[g].clone()])
                .expect("gold is a sentence")
                .with_type(Some(t))
        } else {
            Document::new(id, sentences_from_texts(&texts), Label::No, vec![]).expect("valid negative")
        };
        docs.push(doc.with_domain(Some("synthetic".into())));
    }
    docs
}

fn normalize(s: &str) -> String {
    tokenize(s).join(" ")
}

/// Deterministic stand-in for an LLM over a known set of documents.
#[derive(Debug, Clone)]
pub struct ScriptedModel {
    docs: Vec<Document>,
    seed: u64,
    behavior: SynthBehavior,
    by_text: HashMap<String, usize>,
}

impl ScriptedModel {
    pub fn new(docs: Vec<Document>, seed: u64, behavior: SynthBehavior) -> Self {
        let mut by_text = HashMap::new();
        for (i, d) in docs.iter().enumerate() {
            for s in d.sentences() {
                by_text.insert(normalize(&s.text), i);
            }
        }
        Self {
            docs,
            seed,
            behavior,
            by_text,
        }
    }

    fn slot_prefix(template: &str, slot: &str) -> String {
        template.split(slot).next().expect("template has slot").to_string()
    }

    fn maybe_paraphrase(&self, rng: &mut ChaCha8Rng, s: &str) -> String {
        if !rng.random_bool(self.behavior.paraphrase_rate) {
            return s.to_string();
        }
        let words: Vec<&str> = s.trim_end_matches('.').split(' ').collect();
        if rng.random_bool(0.5) || words.len() < 3 {
            s.trim_end_matches('.').to_lowercase()
        } else {
            let skip = rng.random_range(0..words.len());
            let kept: Vec<&str> = words
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, w)| *w)
                .collect();
            format!("{}.", kept.join(" "))
        }
    }

    fn wrap(&self, rng: &mut ChaCha8Rng, body: String) -> String {
        if rng.random_bool(self.behavior.fence_rate) {
            format!("```json\n{body}\n```")
        } else {
            body
        }
    }

    fn respond_detect(&self, prompt: &str, document: &str) -> String {
        let mut rng = seeded(self.seed, "detect", prompt);
        if rng.random_bool(self.behavior.garbage_rate) {
            return "I am unable to answer in the requested format.".to_string();
        }
        let remaining: Vec<String> = segment_sentences(document).into_iter().map(|s| s.text).collect();
        let Some(&di) = remaining.first().and_then(|s| self.by_text.get(&normalize(s))) else {
            return json!({"judgement": "no", "evidence": []}).to_string();
        };
        let doc = &self.docs[di];
        let mut profile = seeded(self.seed, "profile", &doc.id);
        let flag_rate = if doc.label.is_yes() {
            self.behavior.detect_rate
        } else {
            self.behavior.false_positive_rate
        };
        let flagged = profile.random_bool(flag_rate);
        let budget = profile.random_range(1..=self.behavior.max_removals.max(1));
        let removed = doc.sentence_count().saturating_sub(remaining.len());

        if !flagged || removed >= budget {
            return self.wrap(&mut rng, json!({"judgement": "no", "evidence": []}).to_string());
        }

        let gold: Option<&String> = doc
            .gold_evidence()
            .iter()
            .find(|g| remaining.iter().any(|r| r == *g));
        let others: Vec<&String> = remaining.iter().filter(|r| Some(*r) != gold).collect();
        let mut evidence = Vec::new();
        match gold {
            Some(g) if rng.random_bool(self.behavior.hit_rate) => evidence.push(self.maybe_paraphrase(&mut rng, g)),
            _ => {
                let pick = others.choose(&mut rng).copied().or(gold).expect("non-empty document");
                evidence.push(self.maybe_paraphrase(&mut rng, pick));
            }
        }
        if rng.random_bool(self.behavior.extra_evidence_rate) {
            if let Some(extra) = others.choose(&mut rng) {
                let e = self.maybe_paraphrase(&mut rng, extra);
                if !evidence.contains(&e) {
                    evidence.push(e);
                }
            }
        }
        self.wrap(&mut rng, json!({"judgement": "yes", "evidence": evidence}).to_string())
    }

    fn respond_filter(&self, prompt: &str, list: &str, constrained: bool) -> String {
        let mut rng = seeded(self.seed, "filter", prompt);
        let items: Vec<String> = serde_json::from_str(list).unwrap_or_default();
        let doc = items
            .iter()
            .find_map(|s| self.by_text.get(&normalize(s)))
            .map(|&i| &self.docs[i]);
        let matching = MatchConfig::<f64>::default();
        let mut keep: Vec<&String> = items
            .iter()
            .filter(|s| {
                let is_true = doc.is_some_and(|d| d.gold_evidence().iter().any(|g| has_match(g, &[s.as_str()], &matching)));
                let p = if is_true {
                    self.behavior.filter_keep_true_rate
                } else {
                    self.behavior.filter_keep_other_rate
                };
                rng.random_bool(p)
            })
            .collect();
        if constrained && keep.is_empty() && !rng.random_bool(self.behavior.constrained_empty_rate) {
            if let Some(one) = items.choose(&mut rng) {
                keep.push(one);
            }
        }
        self.wrap(&mut rng, json!({"evidence": keep}).to_string())
    }

    pub fn respond(&self, prompt: &str) -> String {
        let detect = Self::slot_prefix(DETECT_TEMPLATE, "{document}");
        let slot = "{list of inconsistent sentences}";
        let cf = Self::slot_prefix(FILTER_CONSTRAINED_TEMPLATE, slot);
        let uf = Self::slot_prefix(FILTER_UNCONSTRAINED_TEMPLATE, slot);
        if let Some(doc) = prompt.strip_prefix(&detect) {
            self.respond_detect(prompt, doc)
        } else if let Some(list) = prompt.strip_prefix(&cf) {
            self.respond_filter(prompt, list, true)
        } else if let Some(list) = prompt.strip_prefix(&uf) {
            self.respond_filter(prompt, list, false)
        } else {
            "unrecognized prompt".to_string()
        }
    }
}

impl Backend for ScriptedModel {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        Ok(self.respond(prompt))
    }
}

/// Wraps a backend and records every prompt/response pair.
#[derive(Clone)]
pub struct RecordingBackend<B> {
    inner: B,
    recorded: Arc<Mutex<ReplayFixture>>,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            recorded: Arc::new(Mutex::new(ReplayFixture::default())),
        }
    }

    pub fn handle(&self) -> Arc<Mutex<ReplayFixture>> {
        Arc::clone(&self.recorded)
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    /// Prompts already recorded are answered from the recording, so the
    /// inner backend must be deterministic per prompt.
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        if let Some(r) = self.recorded.lock().expect("recorder poisoned").get(prompt) {
            return Ok(r.to_string());
        }
        let r = self.inner.complete(prompt)?;
        self.recorded.lock().expect("recorder poisoned").insert(prompt, r.clone());
        Ok(r)
    }
}

/// Documents plus a replay fixture covering every approach under the default
/// run configuration.
pub fn generate_synthetic(spec: &SynthSpec) -> SynthDataset {
    let documents = generate_documents(spec);
    let model = Arc::new(ScriptedModel::new(documents.clone(), spec.seed, spec.behavior.clone()));
    let recorder = RecordingBackend::new(model);
    let handle = recorder.handle();
    let client = LlmClient::with_backend(synthetic_backend_config(), recorder);
    for approach in Approach::ALL {
        let cfg = RunConfig::<f64>::new(approach, synthetic_backend_config());
        run_dataset(&documents, &client, &cfg, None).expect("synthetic ids are unique");
    }
    let fixture = handle.lock().expect("recorder poisoned").clone();
    SynthDataset { documents, fixture }
}
