use serde::{Deserialize, Serialize};

use crate::pipeline::PredictionTrace;
use crate::scalar::{nan_as_null, Scalar};
use crate::text::{has_match, Document, Label, MatchConfig};

use super::MetricsError;

/// Confusion-matrix cell of one document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    TP,
    FP,
    TN,
    FN,
}

impl Outcome {
    pub fn from_labels(truth: Label, predicted: Label) -> Self {
        match (truth, predicted) {
            (Label::Yes, Label::Yes) => Outcome::TP,
            (Label::No, Label::Yes) => Outcome::FP,
            (Label::No, Label::No) => Outcome::TN,
            (Label::Yes, Label::No) => Outcome::FN,
        }
    }
}

/// Evidence scores of one document. `eh`, `ep` and `er` only carry meaning
/// for positive documents and are 0 for negatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct PerDocScore<T> {
    pub doc_id: String,
    pub truth: Label,
    pub predicted: Label,
    pub classified: Outcome,
    /// 1 when every gold sentence is matched in the predicted evidence.
    pub eh: u8,
    #[serde(with = "nan_as_null")]
    pub ep: T,
    #[serde(with = "nan_as_null")]
    pub er: T,
    #[serde(with = "nan_as_null")]
    pub ecr: T,
    pub matched_gold: usize,
    pub predicted_evidence_size: usize,
    pub gold_evidence_size: usize,
    pub sentence_count: usize,
    /// LLM calls spent on the document, filter call included.
    pub retries: usize,
    pub failed: bool,
}

/// Predicted evidence as scored: empty whenever the prediction is No or the
/// trace failed, deduplicated otherwise.
pub fn effective_evidence(trace: &PredictionTrace) -> Vec<String> {
    if trace.is_failed() || !trace.final_judgement.is_yes() {
        return Vec::new();
    }
    let mut out: Vec<String> = Vec::new();
    for e in &trace.final_evidence {
        let e = e.trim();
        if !e.is_empty() && !out.iter().any(|o| o == e) {
            out.push(e.to_string());
        }
    }
    out
}

pub fn effective_judgement(trace: &PredictionTrace) -> Label {
    if trace.is_failed() {
        Label::No
    } else {
        trace.final_judgement
    }
}

pub fn score_doc<T: Scalar>(
    doc: &Document,
    trace: &PredictionTrace,
    matching: &MatchConfig<T>,
) -> Result<PerDocScore<T>, MetricsError> {
    if doc.id != trace.doc_id {
        return Err(MetricsError::Mismatch {
            document: doc.id.clone(),
            trace: trace.doc_id.clone(),
        });
    }
    let predicted = effective_judgement(trace);
    let evidence = effective_evidence(trace);
    let gold = doc.gold_evidence();

    let matched_gold = gold.iter().filter(|g| has_match(g, &evidence, matching)).count();
    let overlap = matched_gold.min(evidence.len());

    let (eh, ep, er) = if doc.label.is_yes() {
        let eh = u8::from(matched_gold == gold.len());
        let ep = if evidence.is_empty() {
            T::zero()
        } else {
            T::ratio(overlap, evidence.len())
        };
        (eh, ep, T::ratio(overlap, gold.len()))
    } else {
        (0, T::zero(), T::zero())
    };
    let ecr = T::ratio(evidence.len(), doc.sentence_count()).min(T::one());

    Ok(PerDocScore {
        doc_id: doc.id.clone(),
        truth: doc.label,
        predicted,
        classified: Outcome::from_labels(doc.label, predicted),
        eh,
        ep,
        er,
        ecr,
        matched_gold,
        predicted_evidence_size: evidence.len(),
        gold_evidence_size: gold.len(),
        sentence_count: doc.sentence_count(),
        retries: trace.llm_call_count,
        failed: trace.is_failed(),
    })
}

/// Score every trace against the document with the same id.
pub fn score_all<T: Scalar>(
    docs: &[Document],
    traces: &[PredictionTrace],
    matching: &MatchConfig<T>,
) -> Result<Vec<PerDocScore<T>>, MetricsError> {
    let by_id: std::collections::HashMap<&str, &Document> =
        docs.iter().map(|d| (d.id.as_str(), d)).collect();
    if traces.len() != docs.len() {
        return Err(MetricsError::Alignment(format!(
            "{} documents but {} traces",
            docs.len(),
            traces.len()
        )));
    }
    let mut seen = std::collections::HashSet::new();
    traces
        .iter()
        .map(|t| {
            if !seen.insert(t.doc_id.as_str()) {
                return Err(MetricsError::Alignment(format!("duplicate trace for {:?}", t.doc_id)));
            }
            let d = by_id
                .get(t.doc_id.as_str())
                .ok_or_else(|| MetricsError::Alignment(format!("no document with id {:?}", t.doc_id)))?;
            score_doc(d, t, matching)
        })
        .collect()
}
