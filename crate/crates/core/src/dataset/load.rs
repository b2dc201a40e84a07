use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::text::{segment_sentences, sentences_from_texts, ContradictionType, Document, DocumentError, Label};

use super::DatasetError;

/// One line of a dataset file. Exactly one of `text` or `sentences` is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentences: Option<Vec<String>>,
    pub label: Label,
    #[serde(default)]
    pub evidence: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contradiction_type: Option<ContradictionType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
}

impl DatasetRecord {
    pub fn from_document(doc: &Document) -> Self {
        Self {
            id: doc.id.clone(),
            text: None,
            sentences: Some(doc.sentences().iter().map(|s| s.text.clone()).collect()),
            label: doc.label,
            evidence: doc.gold_evidence().to_vec(),
            contradiction_type: doc.contradiction_type,
            domain: doc.domain.clone(),
        }
    }

    /// Validate and build the document. Pre-segmented sentences are used as
    /// given; free text goes through the segmenter.
    pub fn into_document(self) -> Result<Document, DatasetError> {
        let schema = |field: &str, message: &str| DatasetError::Schema {
            record: self.id.clone(),
            field: field.to_string(),
            message: message.to_string(),
        };
        let sentences = match (&self.text, &self.sentences) {
            (Some(_), Some(_)) => return Err(schema("text", "both \"text\" and \"sentences\" are present")),
            (None, None) => return Err(schema("text", "one of \"text\" or \"sentences\" is required")),
            (Some(t), None) => segment_sentences(t),
            (None, Some(s)) => {
                if s.iter().any(|x| x.trim().is_empty()) {
                    return Err(schema("sentences", "sentences must be non-empty"));
                }
                sentences_from_texts(s)
            }
        };
        if sentences.is_empty() {
            return Err(schema("sentences", "document has no sentences"));
        }
        if self.evidence.iter().any(|e| e.trim().is_empty()) {
            return Err(schema("evidence", "evidence entries must be non-empty"));
        }
        let doc = Document::new(self.id.clone(), sentences, self.label, self.evidence.clone()).map_err(|e| match e {
            DocumentError::PositiveWithoutEvidence { .. } => schema("evidence", "label yes requires non-empty evidence"),
            DocumentError::NegativeWithEvidence { .. } => schema("evidence", "label no requires empty evidence"),
            DocumentError::EvidenceNotInDocument { evidence, .. } => DatasetError::EvidenceMismatch {
                record: self.id.clone(),
                evidence,
            },
            other => schema("sentences", &other.to_string()),
        })?;
        Ok(doc.with_type(self.contradiction_type).with_domain(self.domain))
    }
}

fn field_error(id: &str, field: &str, message: impl Into<String>) -> DatasetError {
    DatasetError::Schema {
        record: id.to_string(),
        field: field.to_string(),
        message: message.into(),
    }
}

/// Field-by-field decoding so errors name the record and field.
fn decode_record(obj: &Map<String, Value>, line: usize) -> Result<DatasetRecord, DatasetError> {
    let id = match obj.get("id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => return Err(field_error(&format!("<line {line}>"), "id", "missing or not a string")),
    };
    let opt_string = |field: &str| -> Result<Option<String>, DatasetError> {
        match obj.get(field) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(field_error(&id, field, "not a string")),
        }
    };
    let string_list = |field: &str| -> Result<Option<Vec<String>>, DatasetError> {
        match obj.get(field) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| field_error(&id, field, "entries must be strings"))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(_) => Err(field_error(&id, field, "not a list of strings")),
        }
    };
    let label = match obj.get("label") {
        Some(Value::String(s)) => s
            .parse::<Label>()
            .map_err(|e| field_error(&id, "label", e))?,
        _ => return Err(field_error(&id, "label", "missing or not \"yes\"/\"no\"")),
    };
    let contradiction_type = match opt_string("contradiction_type")? {
        None => None,
        Some(s) => Some(
            serde_json::from_value::<ContradictionType>(Value::String(s.to_lowercase()))
                .map_err(|_| field_error(&id, "contradiction_type", format!("unknown type {s:?}")))?,
        ),
    };
    Ok(DatasetRecord {
        text: opt_string("text")?,
        sentences: string_list("sentences")?,
        label,
        evidence: string_list("evidence")?.unwrap_or_default(),
        contradiction_type,
        domain: opt_string("domain")?,
        id,
    })
}

/// Parse dataset content: a JSON array of records, or one record per line.
pub fn parse_dataset(content: &str) -> Result<Vec<Document>, DatasetError> {
    let trimmed = content.trim_start();
    let values: Vec<(usize, Value)> = if trimmed.starts_with('[') {
        let v: Vec<Value> = serde_json::from_str(trimmed).map_err(|e| DatasetError::Json {
            line: e.line(),
            message: e.to_string(),
        })?;
        v.into_iter().enumerate().map(|(i, v)| (i + 1, v)).collect()
    } else {
        let mut out = Vec::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let v = serde_json::from_str(line).map_err(|e| DatasetError::Json {
                line: i + 1,
                message: e.to_string(),
            })?;
            out.push((i + 1, v));
        }
        out
    };

    let mut seen = HashSet::new();
    let mut docs = Vec::with_capacity(values.len());
    for (line, v) in values {
        let obj = v.as_object().ok_or_else(|| DatasetError::Json {
            line,
            message: "record is not a JSON object".into(),
        })?;
        let doc = decode_record(obj, line)?.into_document()?;
        if !seen.insert(doc.id.clone()) {
            return Err(DatasetError::DuplicateId(doc.id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load(path: &Path) -> Result<Vec<Document>, DatasetError> {
    let content = fs::read_to_string(path).map_err(|e| DatasetError::Io(format!("{}: {e}", path.display())))?;
    let docs = parse_dataset(&content)?;
    let s = DatasetSummary::of(&docs);
    log::info!(
        "loaded {} documents ({} positive, {} negative); avg sentences pos/neg/all = {:.1}/{:.1}/{:.1}",
        s.documents,
        s.positives,
        s.negatives,
        s.avg_sentences_pos,
        s.avg_sentences_neg,
        s.avg_sentences_all
    );
    Ok(docs)
}

/// Write documents as JSONL in the pre-segmented form.
pub fn write_jsonl<W: Write>(docs: &[Document], mut out: W) -> std::io::Result<()> {
    for d in docs {
        let line = serde_json::to_string(&DatasetRecord::from_document(d)).expect("record serializes");
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_jsonl(docs: &[Document]) -> String {
    let mut buf = Vec::new();
    write_jsonl(docs, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub documents: usize,
    pub positives: usize,
    pub negatives: usize,
    pub avg_sentences_pos: f64,
    pub avg_sentences_neg: f64,
    pub avg_sentences_all: f64,
}

impl DatasetSummary {
    pub fn of(docs: &[Document]) -> Self {
        let avg = |it: &mut dyn Iterator<Item = &Document>| {
            let (sum, n) = it.fold((0usize, 0usize), |(s, n), d| (s + d.sentence_count(), n + 1));
            if n == 0 {
                f64::NAN
            } else {
                sum as f64 / n as f64
            }
        };
        let positives = docs.iter().filter(|d| d.label.is_yes()).count();
        Self {
            documents: docs.len(),
            positives,
            negatives: docs.len() - positives,
            avg_sentences_pos: avg(&mut docs.iter().filter(|d| d.label.is_yes())),
            avg_sentences_neg: avg(&mut docs.iter().filter(|d| !d.label.is_yes())),
            avg_sentences_all: avg(&mut docs.iter()),
        }
    }
}
