use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::llm::{BackendConfig, LlmClient, LlmError};
use crate::scalar::Scalar;
use crate::text::{join_sentences, redact_counted, Document, Label, MatchConfig, Sentence};

use super::trace::{union_evidence, Approach, FilterStage, PredictionTrace, Round, StopReason, TraceError};
use super::PipelineError;

pub const DEFAULT_MAX_ROUNDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct RunConfig<T> {
    pub approach: Approach,
    pub backend: BackendConfig,
    pub matching: MatchConfig<T>,
    pub max_rounds: usize,
    pub parallelism: usize,
}

impl<T: Scalar> RunConfig<T> {
    pub fn new(approach: Approach, backend: BackendConfig) -> Self {
        Self {
            approach,
            backend,
            matching: MatchConfig::default(),
            max_rounds: DEFAULT_MAX_ROUNDS,
            parallelism: 1,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.max_rounds == 0 {
            return Err(PipelineError::Config("max_rounds must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(PipelineError::Config("parallelism must be at least 1".into()));
        }
        self.matching
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))
    }
}

fn empty_trace<T>(doc: &Document, cfg: &RunConfig<T>) -> PredictionTrace {
    PredictionTrace {
        doc_id: doc.id.clone(),
        approach: cfg.approach,
        model: cfg.backend.model_name.clone(),
        backend_digest: cfg.backend.digest(),
        rounds: Vec::new(),
        filter_stage: None,
        final_judgement: Label::No,
        final_evidence: Vec::new(),
        llm_call_count: 0,
        stop_reason: StopReason::Error,
        truncated: false,
        error: None,
    }
}

fn fail(trace: &mut PredictionTrace, err: LlmError) {
    trace.stop_reason = StopReason::Error;
    trace.final_judgement = Label::No;
    trace.final_evidence.clear();
    trace.error = Some(TraceError {
        message: err.to_string(),
        fatal: err.is_fatal(),
    });
}

fn detect_round(
    client: &LlmClient,
    trace: &mut PredictionTrace,
    working: &[Sentence],
    removed: usize,
    no_match: bool,
) -> Result<Label, LlmError> {
    let verdict = client.detect(&join_sentences(working))?;
    trace.llm_call_count += 1;
    let judgement = verdict.judgement;
    trace.rounds.push(Round {
        round_index: trace.rounds.len() + 1,
        input_sentence_count: working.len(),
        input_origins: working.iter().map(|s| s.origin).collect(),
        removed_by_redaction: removed,
        no_match,
        verdict,
    });
    Ok(judgement)
}

fn finalize_rounds(trace: &mut PredictionTrace) {
    trace.final_judgement = trace.rounds[0].verdict.judgement;
    trace.final_evidence = if trace.final_judgement.is_yes() {
        union_evidence(&trace.rounds)
    } else {
        Vec::new()
    };
}

/// Direct prompting: one detect call on the whole document.
pub fn run_dp<T: Scalar>(doc: &Document, client: &LlmClient, cfg: &RunConfig<T>) -> PredictionTrace {
    let mut trace = empty_trace(doc, cfg);
    match detect_round(client, &mut trace, doc.sentences(), 0, false) {
        Ok(_) => {
            trace.stop_reason = StopReason::SingleCall;
            finalize_rounds(&mut trace);
        }
        Err(e) => fail(&mut trace, e),
    }
    trace
}

fn redact_and_retry<T: Scalar>(
    doc: &Document,
    client: &LlmClient,
    cfg: &RunConfig<T>,
    trace: &mut PredictionTrace,
) -> Result<(), LlmError> {
    let mut working: Vec<Sentence> = doc.sentences().to_vec();
    let mut judgement = detect_round(client, trace, &working, 0, false)?;
    let mut idle_redactions = 0;

    trace.stop_reason = loop {
        if !judgement.is_yes() {
            break StopReason::Negative;
        }
        if trace.rounds.len() >= cfg.max_rounds {
            break StopReason::MaxRounds;
        }
        let evidence = &trace.rounds.last().expect("at least one round").verdict.evidence;
        let redaction = redact_counted(&working, evidence, &cfg.matching);
        if redaction.kept.is_empty() {
            break StopReason::EmptyDocument;
        }
        let no_match = redaction.removed == 0;
        if no_match {
            idle_redactions += 1;
            if idle_redactions >= 2 {
                break StopReason::NoProgress;
            }
        } else {
            idle_redactions = 0;
        }
        working = redaction.kept;
        judgement = detect_round(client, trace, &working, redaction.removed, no_match)?;
    };
    trace.truncated = trace.stop_reason == StopReason::MaxRounds;
    finalize_rounds(trace);
    Ok(())
}

/// Redact-and-retry: detect, redact the reported evidence, detect again,
/// while the model keeps answering Yes. The final judgement is the first
/// round's; the final evidence is the union over rounds.
pub fn run_rnr<T: Scalar>(doc: &Document, client: &LlmClient, cfg: &RunConfig<T>) -> PredictionTrace {
    let mut trace = empty_trace(doc, cfg);
    if let Err(e) = redact_and_retry(doc, client, cfg, &mut trace) {
        fail(&mut trace, e);
    }
    trace
}

/// Redact-and-retry followed by one filter call over the accumulated
/// evidence. The filter is skipped when there is no evidence to filter.
pub fn run_rnr_filtered<T: Scalar>(
    doc: &Document,
    client: &LlmClient,
    cfg: &RunConfig<T>,
    constrained: bool,
) -> PredictionTrace {
    let mut trace = empty_trace(doc, cfg);
    if let Err(e) = redact_and_retry(doc, client, cfg, &mut trace) {
        fail(&mut trace, e);
        return trace;
    }
    if !trace.final_judgement.is_yes() || trace.final_evidence.is_empty() {
        return trace;
    }
    let input = trace.final_evidence.clone();
    match client.filter_evidence(&input, constrained, &cfg.matching) {
        Ok(outcome) => {
            trace.llm_call_count += 1;
            if outcome.evidence.is_empty() {
                // Only reachable unconstrained: the filter rejected everything.
                trace.final_judgement = Label::No;
            }
            trace.final_evidence = outcome.evidence.clone();
            trace.filter_stage = Some(FilterStage {
                constrained,
                input,
                output: outcome.evidence,
                raw_response: outcome.raw_response,
                parse_status: outcome.parse_status,
                fallback: outcome.fallback,
            });
        }
        Err(e) => fail(&mut trace, e),
    }
    trace
}

/// Run the configured approach on one document.
pub fn run_document<T: Scalar>(doc: &Document, client: &LlmClient, cfg: &RunConfig<T>) -> PredictionTrace {
    match cfg.approach {
        Approach::Dp => run_dp(doc, client, cfg),
        Approach::Rnr => run_rnr(doc, client, cfg),
        Approach::RnrUf => run_rnr_filtered(doc, client, cfg, false),
        Approach::RnrCf => run_rnr_filtered(doc, client, cfg, true),
    }
}

/// Run every document, up to `cfg.parallelism` at a time.
///
/// Traces come back in input order. When `sink` is given each trace is
/// written as one JSON line as soon as every earlier document has finished,
/// so the file is identical regardless of scheduling.
pub fn run_dataset<T: Scalar>(
    docs: &[Document],
    client: &LlmClient,
    cfg: &RunConfig<T>,
    mut sink: Option<&mut dyn Write>,
) -> Result<Vec<PredictionTrace>, PipelineError> {
    cfg.validate()?;
    let mut seen = HashSet::new();
    for d in docs {
        if !seen.insert(d.id.as_str()) {
            return Err(PipelineError::DuplicateId(d.id.clone()));
        }
    }

    let next = AtomicUsize::new(0);
    let workers = cfg.parallelism.min(docs.len()).max(1);
    let mut out: Vec<Option<PredictionTrace>> = vec![None; docs.len()];

    thread::scope(|scope| -> Result<(), PipelineError> {
        let (tx, rx) = mpsc::channel::<(usize, PredictionTrace)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= docs.len() {
                    break;
                }
                let trace = run_document(&docs[i], client, cfg);
                if tx.send((i, trace)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending: BTreeMap<usize, PredictionTrace> = BTreeMap::new();
        let mut written = 0;
        for (i, trace) in rx {
            if let Some(e) = &trace.error {
                log::warn!("document {} failed: {}", trace.doc_id, e.message);
            }
            pending.insert(i, trace);
            while let Some(t) = pending.remove(&written) {
                if let Some(w) = sink.as_deref_mut() {
                    w.write_all(t.to_json_line().as_bytes())
                        .and_then(|_| w.flush())
                        .map_err(|e| PipelineError::Io(e.to_string()))?;
                }
                out[written] = Some(t);
                written += 1;
            }
        }
        Ok(())
    })?;

    Ok(out.into_iter().map(|t| t.expect("every document produced a trace")).collect())
}
