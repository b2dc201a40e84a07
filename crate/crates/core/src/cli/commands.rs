use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use crate::dataset::{self, generate_synthetic, synthetic_backend_config, SynthSpec};
use crate::llm::{BackendConfig, BackendKind, LlmClient, ReplayFixture};
use crate::metrics::{
    aggregate, column_name, filter_error_analysis, filter_error_analysis_from_trace, render_filter_table,
    render_report_table, score_all, verify_identities, write_plot_data, EvaluationReport, IDENTITY_TOLERANCE,
};
use crate::pipeline::{read_traces, run_dataset, Approach, PredictionTrace, RunConfig};
use crate::text::MatchConfig;

use super::{BackendChoice, GenSynthArgs, ReportArgs, RunArgs, ScoreArgs, ValidateArgs, EXIT_FATAL, EXIT_OK, EXIT_PARTIAL};

fn merge_config(flags: RunArgs) -> Result<RunArgs> {
    let Some(path) = flags.config.clone() else {
        return Ok(flags);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let file: RunArgs = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    macro_rules! pick {
        ($($f:ident),*) => { RunArgs { config: flags.config, $($f: flags.$f.or(file.$f)),* } };
    }
    Ok(pick!(
        dataset, approach, backend, model, temperature, max_rounds, parallelism, cache_dir, fixture, out,
        endpoint, api_key_env, threshold, max_parse_retries, max_in_flight, timeout_s
    ))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_run(args: RunArgs) -> Result<i32> {
    let a = merge_config(args)?;
    let dataset_path = a.dataset.clone().ok_or_else(|| anyhow!("--dataset is required"))?;
    let out_path = a.out.clone().ok_or_else(|| anyhow!("--out is required"))?;
    let approach: Approach = a
        .approach
        .as_deref()
        .ok_or_else(|| anyhow!("--approach is required"))?
        .parse()
        .map_err(|e: String| anyhow!(e))?;
    let backend_choice = a.backend.unwrap_or(BackendChoice::Replay);

    let docs = dataset::load(&dataset_path).with_context(|| format!("loading {}", dataset_path.display()))?;

    let mut backend = match backend_choice {
        BackendChoice::Http => BackendConfig::http(a.model.clone().ok_or_else(|| anyhow!("--model is required for the http backend"))?),
        BackendChoice::Replay => BackendConfig::replay(a.model.clone().unwrap_or_else(|| "replay".into())),
    };
    if let Some(t) = a.temperature {
        backend.temperature = t;
    }
    if let Some(e) = &a.endpoint {
        backend.endpoint_url = e.clone();
    }
    if let Some(k) = &a.api_key_env {
        backend.api_key_env = k.clone();
    }
    if let Some(r) = a.max_parse_retries {
        backend.max_parse_retries = r;
    }
    if let Some(n) = a.max_in_flight {
        backend.max_in_flight = n;
    }
    if let Some(t) = a.timeout_s {
        backend.timeout_s = t;
    }
    backend.cache_dir = a.cache_dir.clone();

    let fixture = match (&backend.kind, &a.fixture) {
        (BackendKind::ScriptedReplay, Some(p)) => Some(ReplayFixture::load(p)?),
        (BackendKind::ScriptedReplay, None) => bail!("--fixture is required for the replay backend"),
        _ => None,
    };

    let mut cfg = RunConfig::<f64>::new(approach, backend.clone());
    if let Some(t) = a.threshold {
        cfg.matching = MatchConfig::with_threshold(t)?;
    }
    if let Some(r) = a.max_rounds {
        cfg.max_rounds = r;
    }
    cfg.parallelism = a.parallelism.unwrap_or(1);
    cfg.validate()?;

    let client = LlmClient::from_config(backend, fixture)?;

    if let Some(dir) = out_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file = File::create(&out_path).with_context(|| format!("creating {}", out_path.display()))?;
    let mut writer = BufWriter::new(file);
    let traces = run_dataset(&docs, &client, &cfg, Some(&mut writer))?;
    writer.flush()?;

    let calls: usize = traces.iter().map(|t| t.llm_call_count).sum();
    let failed: Vec<&PredictionTrace> = traces.iter().filter(|t| t.is_failed()).collect();
    eprintln!(
        "{}: {} documents, {} LLM calls ({} backend requests), {} failed -> {}",
        approach,
        traces.len(),
        calls,
        client.backend_calls(),
        failed.len(),
        out_path.display()
    );
    if let Some(t) = failed.iter().find(|t| t.error.as_ref().is_some_and(|e| e.fatal)) {
        eprintln!(
            "error: fatal backend error on {}: {}",
            t.doc_id,
            t.error.as_ref().map(|e| e.message.as_str()).unwrap_or("")
        );
        return Ok(EXIT_FATAL);
    }
    Ok(if failed.is_empty() { EXIT_OK } else { EXIT_PARTIAL })
}

fn report_json(report: &EvaluationReport<f64>) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Score traces and attach approach/model labels when the traces agree.
pub fn score_traces(
    docs: &[crate::text::Document],
    traces: &[PredictionTrace],
    matching: &MatchConfig<f64>,
) -> Result<EvaluationReport<f64>> {
    let scores = score_all(docs, traces, matching)?;
    let mut report = aggregate(&scores)?;
    let uniform = |f: fn(&PredictionTrace) -> String| {
        let first = traces.first().map(f)?;
        traces.iter().all(|t| f(t) == first).then_some(first)
    };
    report.approach = uniform(|t| t.approach.as_str().to_string());
    report.model = uniform(|t| t.model.clone());
    Ok(report)
}

pub fn cmd_score(a: ScoreArgs) -> Result<i32> {
    let docs = dataset::load(&a.dataset).with_context(|| format!("loading {}", a.dataset.display()))?;
    let traces = read_traces(&a.traces)?;
    let matching = MatchConfig::with_threshold(a.threshold)?;
    let report = score_traces(&docs, &traces, &matching)?;

    if let Some(p) = &a.per_doc {
        let scores = score_all(&docs, &traces, &matching)?;
        let mut s = String::new();
        for sc in &scores {
            s.push_str(&serde_json::to_string(sc)?);
            s.push('\n');
        }
        write_file(p, &s)?;
    }
    if let Some(p) = &a.out {
        write_file(p, &report_json(&report))?;
    }
    if a.table {
        let header = column_name(&report, "report");
        print!("{}", render_report_table(&[header], &[&report]));
    }
    if let Some(dir) = &a.plot_data {
        write_plot_data(dir, &[&report])?;
    }
    if a.out.is_none() && !a.table {
        print!("{}", report_json(&report));
    }

    let residuals = verify_identities(&report);
    if !residuals.within(IDENTITY_TOLERANCE) {
        eprintln!(
            "error: identity residuals exceed {IDENTITY_TOLERANCE:e}: hit {:e}, precision {:e}, recall {:e}",
            residuals.hit, residuals.precision, residuals.recall
        );
        return Ok(EXIT_FATAL);
    }
    Ok(EXIT_OK)
}

fn load_report(path: &Path) -> Result<EvaluationReport<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn cmd_report(a: ReportArgs) -> Result<i32> {
    if a.reports.is_empty() && a.post_traces.is_empty() {
        bail!("nothing to report: pass --reports and/or --post-traces");
    }
    let reports: Vec<EvaluationReport<f64>> = a.reports.iter().map(|p| load_report(p)).collect::<Result<_>>()?;
    let headers: Vec<String> = reports
        .iter()
        .zip(&a.reports)
        .map(|(r, p)| column_name(r, &p.file_stem().unwrap_or_default().to_string_lossy()))
        .collect();
    if a.compare || reports.len() <= 1 {
        if !reports.is_empty() {
            let refs: Vec<&EvaluationReport<f64>> = reports.iter().collect();
            print!("{}", render_report_table(&headers, &refs));
        }
    } else {
        for (h, r) in headers.iter().zip(&reports) {
            print!("{}", render_report_table(std::slice::from_ref(h), &[r]));
            println!();
        }
    }

    if !a.post_traces.is_empty() {
        let dataset_path = a
            .dataset
            .as_ref()
            .ok_or_else(|| anyhow!("--dataset is required for filter analysis"))?;
        let docs = dataset::load(dataset_path)?;
        let matching = MatchConfig::with_threshold(a.threshold)?;
        let pre = a.pre_traces.as_ref().map(|p| read_traces(p)).transpose()?;
        let mut analyses = Vec::new();
        let mut headers = Vec::new();
        for path in &a.post_traces {
            let post = read_traces(path)?;
            let analysis = match &pre {
                Some(pre) => filter_error_analysis(pre, &post, &docs, &matching)?,
                None => filter_error_analysis_from_trace(&post, &docs, &matching)?,
            };
            let name = post
                .first()
                .map(|t| t.approach.label().to_string())
                .unwrap_or_else(|| path.display().to_string());
            headers.push(name);
            analyses.push(analysis);
        }
        println!();
        let refs: Vec<_> = analyses.iter().collect();
        print!("{}", render_filter_table(&headers, &refs));
        if let Some(out) = &a.out {
            let named: serde_json::Map<String, serde_json::Value> = headers
                .iter()
                .cloned()
                .zip(analyses.iter().map(|x| serde_json::to_value(x).expect("analysis serializes")))
                .collect();
            write_file(out, &(serde_json::to_string_pretty(&named)? + "\n"))?;
        }
    }
    Ok(EXIT_OK)
}

/// Run every approach over `n` seeded synthetic datasets and return the
/// largest identity residual seen.
pub fn synthetic_identity_sweep(n: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..n {
        let s = seed.wrapping_add(k as u64);
        let size = 20 + (s as usize * 7) % 31;
        let n_pos = size / 2 + (s as usize % 5);
        let spec = SynthSpec::new(s, n_pos.min(size), size - n_pos.min(size));
        let synth = generate_synthetic(&spec);
        let client = LlmClient::replay(synthetic_backend_config(), synth.fixture.clone());
        for approach in Approach::ALL {
            let cfg = RunConfig::<f64>::new(approach, synthetic_backend_config());
            let traces = run_dataset(&synth.documents, &client, &cfg, None)?;
            let report = score_traces(&synth.documents, &traces, &cfg.matching)?;
            worst = worst.max(report.identity_residuals.max());
            if report.identity_residuals.as_array().iter().any(|r| r.is_nan()) {
                return Ok(f64::NAN);
            }
        }
    }
    Ok(worst)
}

pub fn cmd_validate_identities(a: ValidateArgs) -> Result<i32> {
    if a.reports.is_empty() && a.synthetic == 0 {
        bail!("pass --reports and/or --synthetic N");
    }
    let mut ok = true;
    for p in &a.reports {
        let r = load_report(p)?;
        let res = verify_identities(&r);
        let pass = res.within(a.tolerance);
        ok &= pass;
        println!(
            "{} {}: hit {:e}, precision {:e}, recall {:e}",
            if pass { "PASS" } else { "FAIL" },
            p.display(),
            res.hit,
            res.precision,
            res.recall
        );
    }
    if a.synthetic > 0 {
        let worst = synthetic_identity_sweep(a.synthetic, a.seed)?;
        let pass = worst <= a.tolerance;
        ok &= pass;
        println!(
            "{} synthetic sweep ({} datasets from seed {}): max residual {:e}",
            if pass { "PASS" } else { "FAIL" },
            a.synthetic,
            a.seed,
            worst
        );
    }
    Ok(if ok { EXIT_OK } else { EXIT_FATAL })
}

pub fn cmd_gen_synth(a: GenSynthArgs) -> Result<i32> {
    let mut spec = match &a.spec {
        Some(p) => toml::from_str(&fs::read_to_string(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => SynthSpec::default(),
    };
    macro_rules! set {
        ($($flag:ident => $($field:ident).+),*) => { $( if let Some(v) = a.$flag { spec.$($field).+ = v; } )* };
    }
    set!(
        seed => seed, n_pos => n_pos, n_neg => n_neg, min_sentences => min_sentences,
        max_sentences => max_sentences, vocab => vocabulary_size, hit_rate => behavior.hit_rate,
        detect_rate => behavior.detect_rate, false_positive_rate => behavior.false_positive_rate
    );
    let synth = generate_synthetic(&spec);
    write_file(&a.out_dataset, &dataset::to_jsonl(&synth.documents))?;
    write_file(&a.out_fixture, &synth.fixture.to_json())?;
    eprintln!(
        "wrote {} documents to {} and {} fixture entries to {} (replay model name: {})",
        synth.documents.len(),
        a.out_dataset.display(),
        synth.fixture.len(),
        a.out_fixture.display(),
        synthetic_backend_config().model_name
    );
    Ok(EXIT_OK)
}
