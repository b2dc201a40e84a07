use serde::{Deserialize, Serialize};

use crate::scalar::{nan_as_null, Scalar};

use super::score::{Outcome, PerDocScore};
use super::MetricsError;

/// Residuals above this mean a scoring convention was broken.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub n: usize,
    /// |D+|: documents labelled Yes.
    pub positives: usize,
    /// |D++|: documents labelled and predicted Yes.
    pub true_positive_docs: usize,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Classification<T> {
    #[serde(with = "nan_as_null")]
    pub accuracy: T,
    #[serde(with = "nan_as_null")]
    pub precision: T,
    #[serde(with = "nan_as_null")]
    pub recall_tpr: T,
    #[serde(with = "nan_as_null")]
    pub f1: T,
    #[serde(with = "nan_as_null")]
    pub fpr: T,
    #[serde(with = "nan_as_null")]
    pub tnr: T,
    #[serde(with = "nan_as_null")]
    pub fnr: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct EvidenceMetrics<T> {
    #[serde(with = "nan_as_null")]
    pub ehr: T,
    #[serde(with = "nan_as_null")]
    pub ehrc: T,
    #[serde(with = "nan_as_null")]
    pub epr: T,
    #[serde(with = "nan_as_null")]
    pub eprc: T,
    #[serde(with = "nan_as_null")]
    pub err: T,
    #[serde(with = "nan_as_null")]
    pub errc: T,
    #[serde(with = "nan_as_null")]
    pub aecr: T,
}

/// Mean predicted-evidence size and mean LLM calls, split by true label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Averages<T> {
    #[serde(with = "nan_as_null")]
    pub sentences_pos: T,
    #[serde(with = "nan_as_null")]
    pub sentences_neg: T,
    #[serde(with = "nan_as_null")]
    pub sentences_all: T,
    #[serde(with = "nan_as_null")]
    pub retries_pos: T,
    #[serde(with = "nan_as_null")]
    pub retries_neg: T,
    #[serde(with = "nan_as_null")]
    pub retries_all: T,
}

/// `|EHR − TPR·EHRC|`, `|EPR − TPR·EPRC|`, `|ERR − TPR·ERRC|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct IdentityResiduals<T> {
    #[serde(with = "nan_as_null")]
    pub hit: T,
    #[serde(with = "nan_as_null")]
    pub precision: T,
    #[serde(with = "nan_as_null")]
    pub recall: T,
}

impl<T: Scalar> IdentityResiduals<T> {
    pub fn as_array(&self) -> [T; 3] {
        [self.hit, self.precision, self.recall]
    }

    pub fn max(&self) -> T {
        self.as_array().into_iter().fold(T::zero(), |a, b| a.max(b))
    }

    /// True when no residual exceeds `tol` (NaN counts as a breach).
    pub fn within(&self, tol: T) -> bool {
        self.as_array().into_iter().all(|r| r <= tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct EvaluationReport<T> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approach: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub counts: Counts,
    pub classification: Classification<T>,
    pub evidence: EvidenceMetrics<T>,
    pub averages: Averages<T>,
    pub identity_residuals: IdentityResiduals<T>,
}

fn mean<T: Scalar>(values: impl Iterator<Item = T>) -> T {
    let (sum, n) = values.fold((T::zero(), 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        T::nan()
    } else {
        sum / T::from_count(n)
    }
}

/// Dataset-level metrics. Rates with an empty denominator are NaN.
pub fn aggregate<T: Scalar>(scores: &[PerDocScore<T>]) -> Result<EvaluationReport<T>, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::Empty);
    }
    let count = |o: Outcome| scores.iter().filter(|s| s.classified == o).count();
    let counts = Counts {
        n: scores.len(),
        positives: scores.iter().filter(|s| s.truth.is_yes()).count(),
        true_positive_docs: count(Outcome::TP),
        tp: count(Outcome::TP),
        fp: count(Outcome::FP),
        tn: count(Outcome::TN),
        fn_: count(Outcome::FN),
        failed: scores.iter().filter(|s| s.failed).count(),
    };

    let (tp, fp, tn, fn_) = (counts.tp, counts.fp, counts.tn, counts.fn_);
    let precision = T::ratio(tp, tp + fp);
    let recall = T::ratio(tp, tp + fn_);
    let f1 = {
        let den = precision + recall;
        if den.is_nan() || den == T::zero() {
            T::nan()
        } else {
            T::lit(2.0) * precision * recall / den
        }
    };
    let classification = Classification {
        accuracy: T::ratio(tp + tn, counts.n),
        precision,
        recall_tpr: recall,
        f1,
        fpr: T::ratio(fp, tn + fp),
        tnr: T::ratio(tn, tn + fp),
        fnr: T::ratio(fn_, tp + fn_),
    };

    let pos = || scores.iter().filter(|s| s.truth.is_yes());
    let pos_correct = || scores.iter().filter(|s| s.classified == Outcome::TP);
    let eh = |s: &PerDocScore<T>| T::from_count(s.eh as usize);
    let evidence = EvidenceMetrics {
        ehr: mean(pos().map(eh)),
        ehrc: mean(pos_correct().map(eh)),
        epr: mean(pos().map(|s| s.ep)),
        eprc: mean(pos_correct().map(|s| s.ep)),
        err: mean(pos().map(|s| s.er)),
        errc: mean(pos_correct().map(|s| s.er)),
        aecr: mean(pos().map(|s| s.ecr)),
    };

    let neg = || scores.iter().filter(|s| !s.truth.is_yes());
    let size = |s: &PerDocScore<T>| T::from_count(s.predicted_evidence_size);
    let calls = |s: &PerDocScore<T>| T::from_count(s.retries);
    let averages = Averages {
        sentences_pos: mean(pos().map(size)),
        sentences_neg: mean(neg().map(size)),
        sentences_all: mean(scores.iter().map(size)),
        retries_pos: mean(pos().map(calls)),
        retries_neg: mean(neg().map(calls)),
        retries_all: mean(scores.iter().map(calls)),
    };

    let mut report = EvaluationReport {
        approach: None,
        model: None,
        counts,
        classification,
        evidence,
        averages,
        identity_residuals: IdentityResiduals {
            hit: T::zero(),
            precision: T::zero(),
            recall: T::zero(),
        },
    };
    report.identity_residuals = verify_identities(&report);
    Ok(report)
}

fn residual<T: Scalar>(overall: T, tpr: T, when_correct: T, counts: &Counts) -> T {
    if counts.positives == 0 {
        // No positives: both sides are undefined and the identity is vacuous.
        T::zero()
    } else if counts.tp == 0 {
        // TPR = 0, so the overall rate must be exactly 0.
        overall.abs()
    } else {
        (overall - tpr * when_correct).abs()
    }
}

/// Recompute the three identity residuals from a report's fields.
pub fn verify_identities<T: Scalar>(report: &EvaluationReport<T>) -> IdentityResiduals<T> {
    let tpr = report.classification.recall_tpr;
    let e = &report.evidence;
    let c = &report.counts;
    IdentityResiduals {
        hit: residual(e.ehr, tpr, e.ehrc, c),
        precision: residual(e.epr, tpr, e.eprc, c),
        recall: residual(e.err, tpr, e.errc, c),
    }
}
