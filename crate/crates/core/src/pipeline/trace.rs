use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::llm::{ParseStatus, Verdict};
use crate::text::Label;

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Approach {
    #[serde(rename = "dp")]
    Dp,
    #[serde(rename = "rnr")]
    Rnr,
    #[serde(rename = "rnr-uf")]
    RnrUf,
    #[serde(rename = "rnr-cf")]
    RnrCf,
}

impl Approach {
    pub const ALL: [Approach; 4] = [Approach::Dp, Approach::Rnr, Approach::RnrUf, Approach::RnrCf];

    pub fn as_str(self) -> &'static str {
        match self {
            Approach::Dp => "dp",
            Approach::Rnr => "rnr",
            Approach::RnrUf => "rnr-uf",
            Approach::RnrCf => "rnr-cf",
        }
    }

    /// Display name used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Approach::Dp => "DP",
            Approach::Rnr => "RnR",
            Approach::RnrUf => "RnR+UF",
            Approach::RnrCf => "RnR+CF",
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Approach {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Approach::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown approach {s:?} (expected dp, rnr, rnr-uf or rnr-cf)"))
    }
}

/// Why the detect loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Direct prompting makes exactly one call.
    SingleCall,
    /// The latest round answered No.
    Negative,
    /// Redaction left no sentences.
    EmptyDocument,
    /// Two consecutive redactions removed nothing.
    NoProgress,
    /// The round cap was reached while the model still answered Yes.
    MaxRounds,
    /// A backend error ended the run.
    Error,
}

/// One detect call within a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    /// 1-based round number.
    pub round_index: usize,
    pub input_sentence_count: usize,
    /// Original positions of the sentences shown in this round.
    pub input_origins: Vec<usize>,
    /// Sentences removed by redacting the previous round's evidence.
    pub removed_by_redaction: usize,
    /// Set when the previous round's evidence matched no sentence.
    pub no_match: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStage {
    pub constrained: bool,
    pub input: Vec<String>,
    pub output: Vec<String>,
    pub raw_response: String,
    pub parse_status: ParseStatus,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceError {
    pub message: String,
    /// Authentication-type failures that will affect every document.
    pub fatal: bool,
}

/// Everything that happened while predicting one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionTrace {
    pub doc_id: String,
    pub approach: Approach,
    pub model: String,
    pub backend_digest: String,
    pub rounds: Vec<Round>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_stage: Option<FilterStage>,
    pub final_judgement: Label,
    pub final_evidence: Vec<String>,
    pub llm_call_count: usize,
    pub stop_reason: StopReason,
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<TraceError>,
}

impl PredictionTrace {
    pub fn is_failed(&self) -> bool {
        self.error.is_some()
    }

    /// Evidence before the filter stage (the union over rounds).
    pub fn pre_filter_evidence(&self) -> Vec<String> {
        match &self.filter_stage {
            Some(f) => f.input.clone(),
            None => union_evidence(&self.rounds),
        }
    }

    pub fn to_json_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("trace serializes");
        s.push('\n');
        s
    }
}

/// Union of all rounds' evidence, deduplicated by trimmed text, first-seen
/// order.
pub fn union_evidence(rounds: &[Round]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in rounds {
        for e in &r.verdict.evidence {
            let e = e.trim();
            if !e.is_empty() && !out.iter().any(|o| o == e) {
                out.push(e.to_string());
            }
        }
    }
    out
}

/// Read a JSONL trace file.
pub fn read_traces(path: &Path) -> Result<Vec<PredictionTrace>, PipelineError> {
    let file = File::open(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let t = serde_json::from_str(&line).map_err(|e| PipelineError::TraceFormat {
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push(t);
    }
    Ok(out)
}
