use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One sentence of a document.
///
/// `index` is the position in the sentence list the value currently belongs
/// to; `origin` is the position in the original, unredacted document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub index: usize,
    pub origin: usize,
}

impl Sentence {
    pub fn new(text: impl Into<String>, index: usize) -> Self {
        Self {
            text: text.into(),
            index,
            origin: index,
        }
    }
}

/// Build a contiguously indexed sentence list from raw texts.
///
/// Texts are trimmed; entries that are empty after trimming are dropped.
pub fn sentences_from_texts<I, S>(texts: I) -> Vec<Sentence>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    texts
        .into_iter()
        .filter_map(|t| {
            let t = t.as_ref().trim();
            (!t.is_empty()).then(|| t.to_string())
        })
        .enumerate()
        .map(|(i, t)| Sentence::new(t, i))
        .collect()
}

/// Render a sentence list as a single document string.
pub fn join_sentences(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for (i, s) in sentences.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&s.text);
    }
    out
}

/// Binary judgement: does the document contain a self-contradiction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Yes,
    No,
}

impl Label {
    pub fn is_yes(self) -> bool {
        self == Label::Yes
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Yes => "yes",
            Label::No => "no",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yes" => Ok(Label::Yes),
            "no" => Ok(Label::No),
            other => Err(format!("expected \"yes\" or \"no\", got {other:?}")),
        }
    }
}

/// Self-contradiction categories used to tag positive documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContradictionType {
    Negation,
    Numeric,
    Content,
    Perspective,
    Emotion,
    Relation,
    Factual,
    Causal,
}

impl ContradictionType {
    pub const ALL: [ContradictionType; 8] = [
        ContradictionType::Negation,
        ContradictionType::Numeric,
        ContradictionType::Content,
        ContradictionType::Perspective,
        ContradictionType::Emotion,
        ContradictionType::Relation,
        ContradictionType::Factual,
        ContradictionType::Causal,
    ];
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DocumentError {
    #[error("document {id}: has no sentences")]
    Empty { id: String },
    #[error("document {id}: sentence {index} is empty")]
    EmptySentence { id: String, index: usize },
    #[error("document {id}: label yes requires non-empty evidence")]
    PositiveWithoutEvidence { id: String },
    #[error("document {id}: label no requires empty evidence")]
    NegativeWithEvidence { id: String },
    #[error("document {id}: evidence {evidence:?} does not equal any sentence")]
    EvidenceNotInDocument { id: String, evidence: String },
}

/// A labelled document: ordered sentences plus gold label and evidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    sentences: Vec<Sentence>,
    pub label: Label,
    gold_evidence: Vec<String>,
    pub contradiction_type: Option<ContradictionType>,
    pub domain: Option<String>,
}

impl Document {
    /// Validating constructor. Gold evidence is trimmed and deduplicated,
    /// keeping first-seen order.
    pub fn new(
        id: impl Into<String>,
        sentences: Vec<Sentence>,
        label: Label,
        gold_evidence: Vec<String>,
    ) -> Result<Self, DocumentError> {
        let id = id.into();
        if sentences.is_empty() {
            return Err(DocumentError::Empty { id });
        }
        let sentences: Vec<Sentence> = sentences
            .into_iter()
            .enumerate()
            .map(|(i, s)| Sentence {
                text: s.text.trim().to_string(),
                index: i,
                origin: i,
            })
            .collect();
        if let Some(s) = sentences.iter().find(|s| s.text.is_empty()) {
            return Err(DocumentError::EmptySentence { id, index: s.index });
        }
        let mut gold: Vec<String> = Vec::new();
        for e in gold_evidence {
            let e = e.trim().to_string();
            if !gold.contains(&e) {
                gold.push(e);
            }
        }
        match label {
            Label::Yes if gold.is_empty() => {
                return Err(DocumentError::PositiveWithoutEvidence { id })
            }
            Label::No if !gold.is_empty() => return Err(DocumentError::NegativeWithEvidence { id }),
            _ => {}
        }
        if let Some(e) = gold
            .iter()
            .find(|e| !sentences.iter().any(|s| &s.text == *e))
        {
            return Err(DocumentError::EvidenceNotInDocument {
                id,
                evidence: e.clone(),
            });
        }
        Ok(Self {
            id,
            sentences,
            label,
            gold_evidence: gold,
            contradiction_type: None,
            domain: None,
        })
    }

    pub fn with_type(mut self, t: Option<ContradictionType>) -> Self {
        self.contradiction_type = t;
        self
    }

    pub fn with_domain(mut self, d: Option<String>) -> Self {
        self.domain = d;
        self
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn gold_evidence(&self) -> &[String] {
        &self.gold_evidence
    }

    /// Number of sentences in the document.
    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn text(&self) -> String {
        join_sentences(&self.sentences)
    }
}
