//! Mapping from upstream ContraDoc-style exports to [`DatasetRecord`]s.
//!
//! The upstream serialization is not fixed here; a [`FieldMapping`] names
//! the source keys. The defaults expect records shaped like
//!
//! ```json
//! {"id": "...", "text": "...", "label": "pos", "evidence": "...", "type": "negation", "domain": "news"}
//! ```
//!
//! where `evidence` may be a string or a list of strings and `label` is one
//! of `positive_values` (anything else is negative). The top level may be an
//! array of records or an object keyed by record id.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::text::{ContradictionType, Label};

use super::load::DatasetRecord;
use super::DatasetError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMapping {
    pub id: String,
    pub text: String,
    pub label: String,
    pub evidence: String,
    pub contradiction_type: String,
    pub domain: String,
    pub positive_values: Vec<String>,
}

impl Default for FieldMapping {
    fn default() -> Self {
        Self {
            id: "id".into(),
            text: "text".into(),
            label: "label".into(),
            evidence: "evidence".into(),
            contradiction_type: "type".into(),
            domain: "domain".into(),
            positive_values: vec!["pos".into(), "positive".into(), "yes".into(), "1".into(), "true".into()],
        }
    }
}

fn scalar_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn convert_one(key: Option<&str>, v: &Value, m: &FieldMapping) -> Result<DatasetRecord, DatasetError> {
    let obj = v.as_object().ok_or_else(|| DatasetError::Schema {
        record: key.unwrap_or("?").into(),
        field: "<record>".into(),
        message: "record is not an object".into(),
    })?;
    let id = obj
        .get(&m.id)
        .and_then(scalar_string)
        .or_else(|| key.map(str::to_string))
        .ok_or_else(|| DatasetError::Schema {
            record: "?".into(),
            field: m.id.clone(),
            message: "missing id".into(),
        })?;
    let err = |field: &str, message: &str| DatasetError::Schema {
        record: id.clone(),
        field: field.into(),
        message: message.into(),
    };
    let text = obj
        .get(&m.text)
        .and_then(Value::as_str)
        .ok_or_else(|| err(&m.text, "missing text"))?
        .to_string();
    let label_raw = obj
        .get(&m.label)
        .and_then(scalar_string)
        .ok_or_else(|| err(&m.label, "missing label"))?;
    let label = if m.positive_values.iter().any(|p| p.eq_ignore_ascii_case(label_raw.trim())) {
        Label::Yes
    } else {
        Label::No
    };
    let evidence = match obj.get(&m.evidence) {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::String(s)) if s.trim().is_empty() => Vec::new(),
        Some(Value::String(s)) => vec![s.trim().to_string()],
        Some(Value::Array(items)) => items
            .iter()
            .filter_map(Value::as_str)
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
        Some(_) => return Err(err(&m.evidence, "evidence must be a string or list of strings")),
    };
    let contradiction_type = obj
        .get(&m.contradiction_type)
        .and_then(Value::as_str)
        .and_then(parse_type);
    let domain = obj.get(&m.domain).and_then(Value::as_str).map(str::to_string);
    Ok(DatasetRecord {
        id,
        text: Some(text),
        sentences: None,
        label,
        evidence,
        contradiction_type,
        domain,
    })
}

/// Accepts the canonical lowercase names and the longer upstream labels
/// ("Perspective/View/Opinion", "Emotion/Mood/Feeling").
pub fn parse_type(raw: &str) -> Option<ContradictionType> {
    let head = raw.split('/').next().unwrap_or(raw).trim().to_lowercase();
    ContradictionType::ALL
        .into_iter()
        .find(|t| serde_json::to_value(t).ok().and_then(|v| v.as_str().map(|s| s == head)).unwrap_or(false))
}

pub fn convert_value(root: &Value, mapping: &FieldMapping) -> Result<Vec<DatasetRecord>, DatasetError> {
    match root {
        Value::Array(items) => items.iter().map(|v| convert_one(None, v, mapping)).collect(),
        Value::Object(map) => map.iter().map(|(k, v)| convert_one(Some(k), v, mapping)).collect(),
        _ => Err(DatasetError::Json {
            line: 1,
            message: "expected an array or object of records".into(),
        }),
    }
}
