//! Prompt templates. The asset files are shipped verbatim and must not be
//! edited; tests pin their SHA-256 digests.

use serde::{Deserialize, Serialize};

use super::LlmError;

pub const DETECT_TEMPLATE: &str = include_str!("../../assets/prompts/detect.txt");
pub const FILTER_UNCONSTRAINED_TEMPLATE: &str =
    include_str!("../../assets/prompts/filter_unconstrained.txt");
pub const FILTER_CONSTRAINED_TEMPLATE: &str =
    include_str!("../../assets/prompts/filter_constrained.txt");

const DOCUMENT_SLOT: &str = "{document}";
const SENTENCES_SLOT: &str = "{list of inconsistent sentences}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Detect,
    FilterUnconstrained,
    FilterConstrained,
}

impl PromptKind {
    pub fn template(self) -> &'static str {
        match self {
            PromptKind::Detect => DETECT_TEMPLATE,
            PromptKind::FilterUnconstrained => FILTER_UNCONSTRAINED_TEMPLATE,
            PromptKind::FilterConstrained => FILTER_CONSTRAINED_TEMPLATE,
        }
    }

    fn slot(self) -> &'static str {
        match self {
            PromptKind::Detect => DOCUMENT_SLOT,
            _ => SENTENCES_SLOT,
        }
    }

    pub fn is_filter(self) -> bool {
        self != PromptKind::Detect
    }

    pub fn filter(constrained: bool) -> Self {
        if constrained {
            PromptKind::FilterConstrained
        } else {
            PromptKind::FilterUnconstrained
        }
    }
}

/// What gets substituted into a template.
#[derive(Debug, Clone, Copy)]
pub enum PromptPayload<'a> {
    Document(&'a str),
    Sentences(&'a [String]),
}

/// Sentence lists are rendered as a JSON array of strings on one line.
pub fn render_sentence_list(sentences: &[String]) -> String {
    let items: Vec<String> = sentences
        .iter()
        .map(|s| serde_json::to_string(s).expect("string serialization"))
        .collect();
    format!("[{}]", items.join(", "))
}

pub fn render_prompt(kind: PromptKind, payload: PromptPayload<'_>) -> Result<String, LlmError> {
    let text = match (kind, payload) {
        (PromptKind::Detect, PromptPayload::Document(d)) => d.to_string(),
        (k, PromptPayload::Sentences(s)) if k.is_filter() => render_sentence_list(s),
        _ => return Err(LlmError::PayloadMismatch(kind)),
    };
    Ok(kind.template().replacen(kind.slot(), &text, 1))
}
