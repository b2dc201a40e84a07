//! Approximate sentence matching and redaction.
//!
//! Every comparison fits its own vectorizer on `{query} ∪ candidates`, so
//! the outcome for one sentence never depends on the rest of the document.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::document::Sentence;
use super::tfidf::Vectorizer;
use super::TextError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tokenizer {
    #[default]
    LowercaseAlnum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdfScheme {
    #[default]
    Smoothed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    #[default]
    L2,
}

/// Parameters for approximate sentence comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct MatchConfig<T> {
    /// Minimum cosine similarity counted as a match (inclusive).
    pub cosine_threshold: T,
    #[serde(default)]
    pub tokenizer: Tokenizer,
    #[serde(default)]
    pub idf_scheme: IdfScheme,
    #[serde(default)]
    pub norm: Norm,
}

impl<T: Scalar> Default for MatchConfig<T> {
    fn default() -> Self {
        Self {
            cosine_threshold: T::lit(0.8),
            tokenizer: Tokenizer::LowercaseAlnum,
            idf_scheme: IdfScheme::Smoothed,
            norm: Norm::L2,
        }
    }
}

impl<T: Scalar> MatchConfig<T> {
    pub fn with_threshold(threshold: T) -> Result<Self, TextError> {
        let cfg = Self {
            cosine_threshold: threshold,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), TextError> {
        let t = self.cosine_threshold;
        if t > T::zero() && t <= T::one() {
            Ok(())
        } else {
            Err(TextError::InvalidThreshold(t.to_f64().unwrap_or(f64::NAN)))
        }
    }
}

fn comparison_corpus<'a, S: AsRef<str>>(query: &'a str, candidates: &'a [S]) -> Vec<&'a str> {
    let mut corpus: Vec<&str> = vec![query];
    for c in candidates {
        let c = c.as_ref();
        if !corpus.contains(&c) {
            corpus.push(c);
        }
    }
    corpus
}

/// Best cosine similarity between `query` and any candidate, with the
/// vectorizer fitted on `{query} ∪ candidates`. `None` when there are no
/// candidates.
pub fn best_similarity<T: Scalar, S: AsRef<str>>(query: &str, candidates: &[S]) -> Option<(usize, T)> {
    if candidates.is_empty() {
        return None;
    }
    let corpus = comparison_corpus(query, candidates);
    let v = Vectorizer::<T>::fit(&corpus).expect("corpus contains the query");
    let q = v.transform(query);
    let mut best: Option<(usize, T)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let s = super::tfidf::cosine_similarity(&q, &v.transform(c.as_ref()));
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best
}

/// True iff some candidate has cosine similarity ≥ the threshold with `query`.
pub fn has_match<T: Scalar, S: AsRef<str>>(query: &str, candidates: &[S], config: &MatchConfig<T>) -> bool {
    if candidates.is_empty() {
        return false;
    }
    let corpus = comparison_corpus(query, candidates);
    let v = Vectorizer::<T>::fit(&corpus).expect("corpus contains the query");
    v.has_match_in(query, candidates, config.cosine_threshold)
}

/// Result of a redaction: survivors plus the number of sentences removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Redaction {
    pub kept: Vec<Sentence>,
    pub removed: usize,
}

/// Remove every sentence that matches some evidence entry.
///
/// Survivors keep their relative order and `origin`; `index` is reassigned
/// contiguously from 0. Duplicated sentences are all removed when they match.
pub fn redact_counted<T: Scalar, S: AsRef<str>>(
    sentences: &[Sentence],
    evidence: &[S],
    config: &MatchConfig<T>,
) -> Redaction {
    let mut kept = Vec::with_capacity(sentences.len());
    let mut removed = 0;
    for s in sentences {
        if has_match(&s.text, evidence, config) {
            removed += 1;
        } else {
            kept.push(Sentence {
                text: s.text.clone(),
                index: kept.len(),
                origin: s.origin,
            });
        }
    }
    Redaction { kept, removed }
}

pub fn redact<T: Scalar, S: AsRef<str>>(
    sentences: &[Sentence],
    evidence: &[S],
    config: &MatchConfig<T>,
) -> Vec<Sentence> {
    redact_counted(sentences, evidence, config).kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::document::sentences_from_texts;

    fn cfg() -> MatchConfig<f64> {
        MatchConfig::default()
    }

    #[test]
    fn threshold_validation() {
        assert!(MatchConfig::<f64>::with_threshold(0.8).is_ok());
        assert!(MatchConfig::<f64>::with_threshold(1.0).is_ok());
        assert!(MatchConfig::<f64>::with_threshold(0.0).is_err());
        assert!(MatchConfig::<f64>::with_threshold(1.2).is_err());
        assert!(MatchConfig::<f64>::with_threshold(f64::NAN).is_err());
    }

    #[test]
    fn verbatim_and_empty_candidates() {
        assert!(has_match("The cat sat.", &["Other thing.", "The cat sat."], &cfg()));
        let none: [&str; 0] = [];
        assert!(!has_match("The cat sat.", &none, &cfg()));
    }

    #[test]
    fn threshold_is_inclusive() {
        // Two identical sentences have cosine exactly 1.
        let c = MatchConfig::<f64>::with_threshold(1.0).unwrap();
        assert!(has_match("a b c", &["a b c"], &c));
    }

    #[test]
    fn redact_removes_exact_sentence() {
        let s = sentences_from_texts(["One fish.", "Two fish.", "Red fish."]);
        let out = redact(&s, &["Two fish."], &cfg());
        let texts: Vec<_> = out.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(texts, ["One fish.", "Red fish."]);
        assert_eq!(out[1].index, 1);
        assert_eq!(out[1].origin, 2);
    }

    #[test]
    fn redact_empty_evidence_is_identity() {
        let s = sentences_from_texts(["One fish.", "Two fish."]);
        let none: [&str; 0] = [];
        assert_eq!(redact(&s, &none, &cfg()), s);
    }

    #[test]
    fn redact_removes_duplicates() {
        let s = sentences_from_texts(["Same words here.", "Other.", "Same words here."]);
        let r = redact_counted(&s, &["Same words here."], &cfg());
        assert_eq!(r.removed, 2);
        assert_eq!(r.kept.len(), 1);
    }

    #[test]
    fn best_similarity_picks_max() {
        let (i, s) = best_similarity::<f64, _>("the cat sat", &["dogs run", "the cat sat"]).unwrap();
        assert_eq!(i, 1);
        assert!((s - 1.0).abs() < 1e-12);
    }
}
