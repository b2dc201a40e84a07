//! Plain-text tables and plot-ready CSV files.

use std::fs;
use std::path::Path;

use crate::scalar::Scalar;

use super::aggregate::EvaluationReport;
use super::filter::FilterErrorReport;

enum Cell<T> {
    Count(usize),
    Rate(T),
    Mean(T),
}

fn fmt_cell<T: Scalar>(c: &Cell<T>) -> String {
    let float = |v: T, places: usize| {
        if v.is_nan() {
            "nan".to_string()
        } else {
            format!("{:.*}", places, v.to_f64().unwrap_or(f64::NAN))
        }
    };
    match c {
        Cell::Count(n) => n.to_string(),
        Cell::Rate(v) => float(*v, 3),
        Cell::Mean(v) => float(*v, 2),
    }
}

fn report_rows<T: Scalar>(r: &EvaluationReport<T>) -> Vec<(&'static str, Cell<T>)> {
    let c = &r.classification;
    let e = &r.evidence;
    let a = &r.averages;
    vec![
        ("n", Cell::Count(r.counts.n)),
        ("|D+|", Cell::Count(r.counts.positives)),
        ("|D++|", Cell::Count(r.counts.true_positive_docs)),
        ("failed", Cell::Count(r.counts.failed)),
        ("accuracy", Cell::Rate(c.accuracy)),
        ("precision", Cell::Rate(c.precision)),
        ("F1 score", Cell::Rate(c.f1)),
        ("TPR/recall", Cell::Rate(c.recall_tpr)),
        ("FPR", Cell::Rate(c.fpr)),
        ("TNR", Cell::Rate(c.tnr)),
        ("FNR", Cell::Rate(c.fnr)),
        ("EHR", Cell::Rate(e.ehr)),
        ("EHRC", Cell::Rate(e.ehrc)),
        ("EPR", Cell::Rate(e.epr)),
        ("EPRC", Cell::Rate(e.eprc)),
        ("ERR", Cell::Rate(e.err)),
        ("ERRC", Cell::Rate(e.errc)),
        ("AECR", Cell::Rate(e.aecr)),
        ("avg #sen, pos", Cell::Mean(a.sentences_pos)),
        ("avg #sen, neg", Cell::Mean(a.sentences_neg)),
        ("avg #sen, all", Cell::Mean(a.sentences_all)),
        ("avg #retries, pos", Cell::Mean(a.retries_pos)),
        ("avg #retries, neg", Cell::Mean(a.retries_neg)),
        ("avg #retries, all", Cell::Mean(a.retries_all)),
    ]
}

fn filter_rows<T: Scalar>(r: &FilterErrorReport<T>) -> Vec<(&'static str, Cell<T>)> {
    vec![
        ("#flips", Cell::Count(r.flip_count)),
        ("#E found", Cell::Count(r.found_count)),
        ("R(-→+|flip)", Cell::Rate(r.r_wrong_to_correct_given_flip)),
        ("R(+→-|flip)", Cell::Rate(r.r_correct_to_wrong_given_flip)),
        ("R(E kept|E found)", Cell::Rate(r.r_evidence_kept_given_found)),
        ("R(E disc.|E found)", Cell::Rate(r.r_evidence_discarded_given_found)),
    ]
}

fn layout<T: Scalar>(headers: &[String], columns: Vec<Vec<(&'static str, Cell<T>)>>) -> String {
    let Some(first) = columns.first() else {
        return String::new();
    };
    let names: Vec<&str> = first.iter().map(|(n, _)| *n).collect();
    let cells: Vec<Vec<String>> = columns
        .iter()
        .map(|col| col.iter().map(|(_, c)| fmt_cell(c)).collect())
        .collect();
    let label_w = names.iter().map(|n| n.chars().count()).max().unwrap_or(0);
    let widths: Vec<usize> = headers
        .iter()
        .zip(&cells)
        .map(|(h, col)| {
            col.iter()
                .map(|c| c.len())
                .chain([h.chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();

    let mut out = String::new();
    let pad = |s: &str, w: usize| format!("{}{}", " ".repeat(w.saturating_sub(s.chars().count())), s);
    out.push_str(&" ".repeat(label_w));
    for (h, w) in headers.iter().zip(&widths) {
        out.push_str("  ");
        out.push_str(&pad(h, *w));
    }
    out.push('\n');
    for (row, name) in names.iter().enumerate() {
        out.push_str(name);
        out.push_str(&" ".repeat(label_w - name.chars().count()));
        for (col, w) in cells.iter().zip(&widths) {
            out.push_str("  ");
            out.push_str(&pad(&col[row], *w));
        }
        out.push('\n');
    }
    out
}

/// Column header for a report: approach and model when known.
pub fn column_name<T>(r: &EvaluationReport<T>, fallback: &str) -> String {
    match (&r.approach, &r.model) {
        (Some(a), Some(m)) => format!("{a} ({m})"),
        (Some(a), None) => a.clone(),
        (None, Some(m)) => m.clone(),
        (None, None) => fallback.to_string(),
    }
}

/// Aligned table with one column per report.
pub fn render_report_table<T: Scalar>(headers: &[String], reports: &[&EvaluationReport<T>]) -> String {
    layout(headers, reports.iter().map(|r| report_rows(r)).collect())
}

pub fn render_filter_table<T: Scalar>(headers: &[String], reports: &[&FilterErrorReport<T>]) -> String {
    layout(headers, reports.iter().map(|r| filter_rows(r)).collect())
}

const RADAR_AXES: [&str; 7] = ["accuracy", "TPR", "EHR", "EHRC", "EPR", "EPRC", "AECR"];

fn csv_value<T: Scalar>(v: T) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{}", v.to_f64().unwrap_or(f64::NAN))
    }
}

/// Write `ehr_epr.csv`, `ehrc_eprc.csv` and `radar.csv` into `dir`.
pub fn write_plot_data<T: Scalar>(dir: &Path, reports: &[&EvaluationReport<T>]) -> Result<(), csv::Error> {
    fs::create_dir_all(dir)?;
    let ident = |r: &EvaluationReport<T>| {
        (
            r.approach.clone().unwrap_or_default(),
            r.model.clone().unwrap_or_default(),
        )
    };

    let mut w = csv::Writer::from_path(dir.join("ehr_epr.csv"))?;
    w.write_record(["approach", "model", "EHR", "EPR"])?;
    for r in reports {
        let (a, m) = ident(r);
        w.write_record([a, m, csv_value(r.evidence.ehr), csv_value(r.evidence.epr)])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("ehrc_eprc.csv"))?;
    w.write_record(["approach", "model", "EHRC", "EPRC"])?;
    for r in reports {
        let (a, m) = ident(r);
        w.write_record([a, m, csv_value(r.evidence.ehrc), csv_value(r.evidence.eprc)])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("radar.csv"))?;
    w.write_record(["approach", "model", "axis", "value"])?;
    for r in reports {
        let (a, m) = ident(r);
        let values = [
            r.classification.accuracy,
            r.classification.recall_tpr,
            r.evidence.ehr,
            r.evidence.ehrc,
            r.evidence.epr,
            r.evidence.eprc,
            r.evidence.aecr,
        ];
        for (axis, v) in RADAR_AXES.iter().zip(values) {
            w.write_record([a.clone(), m.clone(), axis.to_string(), csv_value(v)])?;
        }
    }
    w.flush()?;
    Ok(())
}
