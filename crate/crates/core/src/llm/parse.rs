//! Strict JSON verdict parsing with limited, flagged repair.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::text::Label;

use super::prompt::PromptKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    /// The whole response was the expected JSON object.
    Clean,
    /// A valid object was recovered from surrounding prose or fences, or a
    /// contradictory field was normalized.
    Repaired,
    /// Nothing usable was found; the verdict is a fallback.
    Failed,
}

/// One parsed model response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub judgement: Label,
    pub evidence: Vec<String>,
    pub raw_response: String,
    pub parse_status: ParseStatus,
}

impl Verdict {
    /// `(No, [])` marked as failed.
    pub fn fallback(raw: impl Into<String>) -> Self {
        Self {
            judgement: Label::No,
            evidence: Vec::new(),
            raw_response: raw.into(),
            parse_status: ParseStatus::Failed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no JSON object with the required keys found in response: {reason}")]
pub struct ParseError {
    pub reason: String,
}

fn fail(reason: impl Into<String>) -> ParseError {
    ParseError {
        reason: reason.into(),
    }
}

/// Parse a model response for a prompt of the given kind.
///
/// Detect responses need `judgement` and `evidence`; filter responses need
/// `evidence` only and get `Yes` when the list is non-empty, `No` otherwise
/// (the caller decides what the filter's judgement means).
pub fn parse_verdict(raw: &str, kind: PromptKind) -> Result<Verdict, ParseError> {
    let trimmed = raw.trim();
    if let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(trimmed) {
        if let Ok(v) = from_object(&obj, raw, kind, ParseStatus::Clean) {
            return Ok(v);
        }
    }

    let mut last_reason = String::from("no JSON object");
    for (i, _) in trimmed.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&trimmed[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(obj))) = stream.next() {
            match from_object(&obj, raw, kind, ParseStatus::Repaired) {
                Ok(v) => return Ok(v),
                Err(e) => last_reason = e.reason,
            }
        }
    }
    Err(fail(last_reason))
}

fn from_object(
    obj: &Map<String, Value>,
    raw: &str,
    kind: PromptKind,
    mut status: ParseStatus,
) -> Result<Verdict, ParseError> {
    let evidence_value = obj.get("evidence").ok_or_else(|| fail("missing key \"evidence\""))?;
    let items = evidence_value
        .as_array()
        .ok_or_else(|| fail("\"evidence\" is not a list"))?;
    let mut evidence = Vec::with_capacity(items.len());
    for item in items {
        let s = item
            .as_str()
            .ok_or_else(|| fail("\"evidence\" contains a non-string entry"))?;
        let s = s.trim();
        if s.is_empty() {
            status = ParseStatus::Repaired;
        } else {
            evidence.push(s.to_string());
        }
    }

    let judgement = if kind == PromptKind::Detect {
        let j = obj
            .get("judgement")
            .ok_or_else(|| fail("missing key \"judgement\""))?
            .as_str()
            .ok_or_else(|| fail("\"judgement\" is not a string"))?;
        j.parse::<Label>().map_err(fail)?
    } else if evidence.is_empty() {
        Label::No
    } else {
        Label::Yes
    };

    if kind == PromptKind::Detect && judgement == Label::No && !evidence.is_empty() {
        evidence.clear();
        status = ParseStatus::Repaired;
    }

    Ok(Verdict {
        judgement,
        evidence,
        raw_response: raw.to_string(),
        parse_status: status,
    })
}
