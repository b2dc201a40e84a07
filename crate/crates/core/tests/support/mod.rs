//! Brute-force reference implementations shared by the integration tests.
//!
//! Everything here is written the slow, obvious way: dense vectors over the
//! full vocabulary, explicit loops, no shared code with the library.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;

use redact_retry::pipeline::PredictionTrace;
use redact_retry::text::{Document, Label};

pub fn oracle_tokens(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            for l in ch.to_lowercase() {
                cur.push(l);
            }
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Cosine between `a` and `b` with IDF fitted on `corpus`.
pub fn oracle_cosine(a: &str, b: &str, corpus: &[String]) -> f64 {
    let vocab: BTreeSet<String> = corpus.iter().flat_map(|s| oracle_tokens(s)).collect();
    let n = corpus.len() as f64;
    let weights = |s: &str| -> Vec<f64> {
        let toks = oracle_tokens(s);
        vocab
            .iter()
            .map(|t| {
                let tf = toks.iter().filter(|x| *x == t).count() as f64;
                let df = corpus.iter().filter(|d| oracle_tokens(d).contains(t)).count() as f64;
                tf * (((1.0 + n) / (1.0 + df)).ln() + 1.0)
            })
            .collect()
    };
    let (va, vb) = (weights(a), weights(b));
    let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
    let na: f64 = va.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = vb.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn oracle_corpus(query: &str, candidates: &[String]) -> Vec<String> {
    let mut corpus = vec![query.to_string()];
    for c in candidates {
        if !corpus.contains(c) {
            corpus.push(c.clone());
        }
    }
    corpus
}

pub fn oracle_has_match(query: &str, candidates: &[String], threshold: f64) -> bool {
    let corpus = oracle_corpus(query, candidates);
    candidates.iter().any(|c| oracle_cosine(query, c, &corpus) >= threshold)
}

/// Every report field recomputed from scratch, keyed by a dotted name.
pub fn oracle_report(docs: &[Document], traces: &[PredictionTrace], threshold: f64) -> BTreeMap<String, f64> {
    let mut ys = Vec::new();
    for d in docs {
        let t = traces.iter().find(|t| t.doc_id == d.id).expect("trace for doc");
        let failed = t.error.is_some();
        let yhat = !failed && t.final_judgement == Label::Yes;
        let mut ehat: Vec<String> = Vec::new();
        if yhat {
            for e in &t.final_evidence {
                let e = e.trim().to_string();
                if !e.is_empty() && !ehat.contains(&e) {
                    ehat.push(e);
                }
            }
        }
        let y = d.label == Label::Yes;
        let gold = d.gold_evidence();
        let mut matched = 0usize;
        for g in gold {
            if oracle_has_match(g, &ehat, threshold) {
                matched += 1;
            }
        }
        let overlap = matched.min(ehat.len());
        let (eh, ep, er) = if y {
            (
                if matched == gold.len() { 1.0 } else { 0.0 },
                if ehat.is_empty() { 0.0 } else { overlap as f64 / ehat.len() as f64 },
                overlap as f64 / gold.len() as f64,
            )
        } else {
            (0.0, 0.0, 0.0)
        };
        let ecr = (ehat.len() as f64 / d.sentence_count() as f64).min(1.0);
        ys.push((y, yhat, eh, ep, er, ecr, ehat.len() as f64, t.llm_call_count as f64));
    }

    let n = ys.len() as f64;
    let tp = ys.iter().filter(|r| r.0 && r.1).count() as f64;
    let fp = ys.iter().filter(|r| !r.0 && r.1).count() as f64;
    let tn = ys.iter().filter(|r| !r.0 && !r.1).count() as f64;
    let fneg = ys.iter().filter(|r| r.0 && !r.1).count() as f64;
    let div = |a: f64, b: f64| if b == 0.0 { f64::NAN } else { a / b };
    let avg = |v: Vec<f64>| div(v.iter().sum(), v.len() as f64);
    let pos: Vec<_> = ys.iter().filter(|r| r.0).collect();
    let tpd: Vec<_> = ys.iter().filter(|r| r.0 && r.1).collect();
    let neg: Vec<_> = ys.iter().filter(|r| !r.0).collect();
    let p = div(tp, tp + fp);
    let r = div(tp, tp + fneg);

    let mut m = BTreeMap::new();
    m.insert("classification.accuracy".into(), div(tp + tn, n));
    m.insert("classification.precision".into(), p);
    m.insert("classification.recall_tpr".into(), r);
    m.insert("classification.f1".into(), if p + r > 0.0 { 2.0 * p * r / (p + r) } else { f64::NAN });
    m.insert("classification.fpr".into(), div(fp, fp + tn));
    m.insert("classification.tnr".into(), div(tn, fp + tn));
    m.insert("classification.fnr".into(), div(fneg, tp + fneg));
    m.insert("evidence.ehr".into(), avg(pos.iter().map(|x| x.2).collect()));
    m.insert("evidence.ehrc".into(), avg(tpd.iter().map(|x| x.2).collect()));
    m.insert("evidence.epr".into(), avg(pos.iter().map(|x| x.3).collect()));
    m.insert("evidence.eprc".into(), avg(tpd.iter().map(|x| x.3).collect()));
    m.insert("evidence.err".into(), avg(pos.iter().map(|x| x.4).collect()));
    m.insert("evidence.errc".into(), avg(tpd.iter().map(|x| x.4).collect()));
    m.insert("evidence.aecr".into(), avg(pos.iter().map(|x| x.5).collect()));
    m.insert("averages.sentences_pos".into(), avg(pos.iter().map(|x| x.6).collect()));
    m.insert("averages.sentences_neg".into(), avg(neg.iter().map(|x| x.6).collect()));
    m.insert("averages.sentences_all".into(), avg(ys.iter().map(|x| x.6).collect()));
    m.insert("averages.retries_pos".into(), avg(pos.iter().map(|x| x.7).collect()));
    m.insert("averages.retries_neg".into(), avg(neg.iter().map(|x| x.7).collect()));
    m.insert("averages.retries_all".into(), avg(ys.iter().map(|x| x.7).collect()));
    m.insert("counts.n".into(), n);
    m.insert("counts.positives".into(), pos.len() as f64);
    m.insert("counts.true_positive_docs".into(), tp);
    m
}

/// Flatten a serialized report into the same dotted keys (null → NaN).
pub fn flatten_report(report: &serde_json::Value) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    for section in ["classification", "evidence", "averages", "counts"] {
        if let Some(obj) = report[section].as_object() {
            for (k, v) in obj {
                m.insert(format!("{section}.{k}"), v.as_f64().unwrap_or(f64::NAN));
            }
        }
    }
    m
}

/// Largest absolute difference over the oracle's keys; NaN must pair with NaN.
pub fn max_report_diff(oracle: &BTreeMap<String, f64>, actual: &BTreeMap<String, f64>) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for (k, o) in oracle {
        let a = *actual.get(k).ok_or_else(|| format!("missing {k}"))?;
        if o.is_nan() || a.is_nan() {
            if o.is_nan() != a.is_nan() {
                return Err(format!("{k}: oracle {o} vs report {a}"));
            }
            continue;
        }
        worst = worst.max((o - a).abs());
    }
    Ok(worst)
}

use redact_retry::llm::{render_prompt, PromptKind, PromptPayload, ReplayFixture};
use redact_retry::text::sentences_from_texts;

pub fn doc(id: &str, sentences: &[&str], label: Label, gold: &[&str]) -> Document {
    Document::new(
        id,
        sentences_from_texts(sentences.iter().copied()),
        label,
        gold.iter().map(|s| s.to_string()).collect(),
    )
    .unwrap()
}

pub fn detect_prompt(sentences: &[&str]) -> String {
    render_prompt(PromptKind::Detect, PromptPayload::Document(&sentences.join(" "))).unwrap()
}

pub fn filter_prompt(sentences: &[&str], constrained: bool) -> String {
    let list: Vec<String> = sentences.iter().map(|s| s.to_string()).collect();
    render_prompt(PromptKind::filter(constrained), PromptPayload::Sentences(&list)).unwrap()
}

pub fn verdict(yes: bool, evidence: &[&str]) -> String {
    serde_json::json!({"judgement": if yes { "yes" } else { "no" }, "evidence": evidence}).to_string()
}

pub fn evidence_only(evidence: &[&str]) -> String {
    serde_json::json!({ "evidence": evidence }).to_string()
}

pub const S: [&str; 6] = [
    "The bakery opens at seven every morning.",
    "Its owner, Mara, has run it for twenty years.",
    "Mara bought the bakery last spring.",
    "The sourdough sells out before noon.",
    "Customers queue around the block on weekends.",
    "The bakery is closed every morning.",
];

/// A six-sentence document whose replay fixture drives three RnR rounds:
/// (Yes, {s3}) → (Yes, {s6}) → (No, {}). The constrained filter keeps s3,
/// the unconstrained one rejects everything.
pub fn three_round_case() -> (Document, ReplayFixture) {
    let d = doc("bakery", &S, Label::Yes, &[S[2]]);
    let mut f = ReplayFixture::default();
    f.insert(&detect_prompt(&S), verdict(true, &[S[2]]));
    let r2: Vec<&str> = S.iter().copied().filter(|s| *s != S[2]).collect();
    f.insert(&detect_prompt(&r2), verdict(true, &[S[5]]));
    let r3: Vec<&str> = r2.iter().copied().filter(|s| *s != S[5]).collect();
    f.insert(&detect_prompt(&r3), verdict(false, &[]));
    f.insert(&filter_prompt(&[S[2], S[5]], true), evidence_only(&[S[2]]));
    f.insert(&filter_prompt(&[S[2], S[5]], false), evidence_only(&[]));
    (d, f)
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_redact-retry")
}

/// `run` then `score` for one approach from the files in `dir` into `out`;
/// returns the bytes of (traces, report).
pub fn run_and_score(dir: &Path, approach: &str, out: &Path) -> (Vec<u8>, Vec<u8>) {
    let traces = out.join(format!("traces-{approach}.jsonl"));
    let report = out.join(format!("report-{approach}.json"));
    let st = Command::new(bin())
        .args(["run", "--config"])
        .arg(dir.join("run.toml"))
        .args(["--approach", approach, "--dataset"])
        .arg(dir.join("dataset.jsonl"))
        .arg("--fixture")
        .arg(dir.join("fixture.json"))
        .arg("--out")
        .arg(&traces)
        .status()
        .unwrap();
    assert!(st.success(), "run {approach}: {st}");
    let st = Command::new(bin())
        .args(["score", "--dataset"])
        .arg(dir.join("dataset.jsonl"))
        .arg("--traces")
        .arg(&traces)
        .arg("--out")
        .arg(&report)
        .status()
        .unwrap();
    assert!(st.success(), "score {approach}: {st}");
    (std::fs::read(traces).unwrap(), std::fs::read(report).unwrap())
}

