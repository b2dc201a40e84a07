//! How a filter call changed classifications and whether it kept true
//! evidence.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::pipeline::PredictionTrace;
use crate::scalar::{nan_as_null, Scalar};
use crate::text::{has_match, Document, Label, MatchConfig};

use super::score::{effective_evidence, effective_judgement};
use super::MetricsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct FilterErrorReport<T> {
    pub flip_count: usize,
    pub wrong_to_correct: usize,
    pub correct_to_wrong: usize,
    pub found_count: usize,
    pub kept_count: usize,
    pub discarded_count: usize,
    #[serde(with = "nan_as_null")]
    pub r_wrong_to_correct_given_flip: T,
    #[serde(with = "nan_as_null")]
    pub r_correct_to_wrong_given_flip: T,
    #[serde(with = "nan_as_null")]
    pub r_evidence_kept_given_found: T,
    #[serde(with = "nan_as_null")]
    pub r_evidence_discarded_given_found: T,
}

/// Judgement and evidence on either side of the filter for one document.
#[derive(Debug, Clone)]
pub struct FilterTransition<'a> {
    pub doc: &'a Document,
    pub pre_judgement: Label,
    pub pre_evidence: Vec<String>,
    pub post_judgement: Label,
    pub post_evidence: Vec<String>,
}

fn contains_gold<T: Scalar>(doc: &Document, evidence: &[String], matching: &MatchConfig<T>) -> bool {
    doc.gold_evidence()
        .iter()
        .any(|g| has_match(g, evidence, matching))
}

pub fn analyze_transitions<T: Scalar>(
    transitions: &[FilterTransition<'_>],
    matching: &MatchConfig<T>,
) -> FilterErrorReport<T> {
    let (mut flips, mut w2c, mut c2w, mut found, mut kept) = (0, 0, 0, 0, 0);
    for t in transitions {
        let truth = t.doc.label;
        if t.pre_judgement != t.post_judgement {
            flips += 1;
            if t.post_judgement == truth {
                w2c += 1;
            }
            if t.pre_judgement == truth {
                c2w += 1;
            }
        }
        if truth.is_yes() && contains_gold(t.doc, &t.pre_evidence, matching) {
            found += 1;
            if contains_gold(t.doc, &t.post_evidence, matching) {
                kept += 1;
            }
        }
    }
    FilterErrorReport {
        flip_count: flips,
        wrong_to_correct: w2c,
        correct_to_wrong: c2w,
        found_count: found,
        kept_count: kept,
        discarded_count: found - kept,
        r_wrong_to_correct_given_flip: T::ratio(w2c, flips),
        r_correct_to_wrong_given_flip: T::ratio(c2w, flips),
        r_evidence_kept_given_found: T::ratio(kept, found),
        r_evidence_discarded_given_found: T::ratio(found - kept, found),
    }
}

fn stage_evidence(trace: &PredictionTrace) -> (Label, Vec<String>) {
    (effective_judgement(trace), effective_evidence(trace))
}

/// Compare a redact-and-retry run (`pre`) against a filtered run (`post`)
/// over the same documents.
pub fn filter_error_analysis<T: Scalar>(
    pre: &[PredictionTrace],
    post: &[PredictionTrace],
    docs: &[Document],
    matching: &MatchConfig<T>,
) -> Result<FilterErrorReport<T>, MetricsError> {
    let docs_by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let post_by_id: HashMap<&str, &PredictionTrace> = post.iter().map(|t| (t.doc_id.as_str(), t)).collect();
    if pre.len() != post.len() || post_by_id.len() != post.len() {
        return Err(MetricsError::Alignment(format!(
            "{} pre-filter traces vs {} post-filter traces",
            pre.len(),
            post.len()
        )));
    }
    let mut transitions = Vec::with_capacity(pre.len());
    for p in pre {
        let q = post_by_id
            .get(p.doc_id.as_str())
            .ok_or_else(|| MetricsError::Alignment(format!("no post-filter trace for {:?}", p.doc_id)))?;
        let doc = docs_by_id
            .get(p.doc_id.as_str())
            .ok_or_else(|| MetricsError::Alignment(format!("no document with id {:?}", p.doc_id)))?;
        let (pre_judgement, pre_evidence) = stage_evidence(p);
        let (post_judgement, post_evidence) = stage_evidence(q);
        transitions.push(FilterTransition {
            doc,
            pre_judgement,
            pre_evidence,
            post_judgement,
            post_evidence,
        });
    }
    Ok(analyze_transitions(&transitions, matching))
}

/// Same analysis from filtered traces alone, reading the pre-filter state
/// from each trace's rounds.
pub fn filter_error_analysis_from_trace<T: Scalar>(
    post: &[PredictionTrace],
    docs: &[Document],
    matching: &MatchConfig<T>,
) -> Result<FilterErrorReport<T>, MetricsError> {
    let docs_by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let mut transitions = Vec::with_capacity(post.len());
    for t in post {
        let doc = docs_by_id
            .get(t.doc_id.as_str())
            .ok_or_else(|| MetricsError::Alignment(format!("no document with id {:?}", t.doc_id)))?;
        let pre_judgement = match (t.is_failed(), t.rounds.first()) {
            (false, Some(r)) => r.verdict.judgement,
            _ => Label::No,
        };
        let pre_evidence = if pre_judgement.is_yes() {
            t.pre_filter_evidence()
        } else {
            Vec::new()
        };
        let (post_judgement, post_evidence) = stage_evidence(t);
        transitions.push(FilterTransition {
            doc,
            pre_judgement,
            pre_evidence,
            post_judgement,
            post_evidence,
        });
    }
    Ok(analyze_transitions(&transitions, matching))
}
