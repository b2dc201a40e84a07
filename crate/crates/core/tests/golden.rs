//! Golden end-to-end files under `tests/fixtures/golden`.
//!
//! `UPDATE_GOLDEN=1 cargo test --test golden` rewrites them from the
//! hand-written script below; otherwise the committed files are checked.

mod support;

use std::path::{Path, PathBuf};

use redact_retry::dataset::to_jsonl;
use redact_retry::llm::ReplayFixture;
use redact_retry::text::Label;
use support::*;

const APPROACHES: [&str; 4] = ["dp", "rnr", "rnr-uf", "rnr-cf"];

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden")
}

fn without<'a>(all: &[&'a str], drop: &[&str]) -> Vec<&'a str> {
    all.iter().copied().filter(|s| !drop.contains(s)).collect()
}

fn script() -> (Vec<redact_retry::text::Document>, ReplayFixture) {
    let mut docs = Vec::new();
    let mut f = ReplayFixture::default();

    // Three rounds; the first answer is fenced and paraphrased.
    let l = [
        "The lighthouse was built in 1871 on the northern cape.",
        "Its lamp was converted to electricity in 1932.",
        "Keepers lived on site until the station was automated.",
        "The lighthouse was first lit in 1902.",
        "Today it houses a small maritime museum.",
    ];
    docs.push(doc("lighthouse", &l, Label::Yes, &[l[3]]));
    f.insert(
        &detect_prompt(&l),
        "```json\n{\"judgement\": \"yes\", \"evidence\": [\"The lighthouse was first lit in 1902\"]}\n```",
    );
    let l2 = without(&l, &[l[3]]);
    f.insert(&detect_prompt(&l2), verdict(true, &[l[1]]));
    f.insert(&detect_prompt(&without(&l2, &[l[1]])), verdict(false, &[]));
    let pre = ["The lighthouse was first lit in 1902", l[1]];
    f.insert(&filter_prompt(&pre, true), evidence_only(&[pre[0]]));
    f.insert(&filter_prompt(&pre, false), evidence_only(&[pre[0]]));

    // Missed positive.
    let o = [
        "The orchard grows twelve kinds of apple.",
        "Harvest starts in late August.",
        "Only one variety of apple is grown there.",
        "Visitors may pick their own fruit.",
    ];
    docs.push(doc("orchard", &o, Label::Yes, &[o[2]]));
    f.insert(&detect_prompt(&o), verdict(false, &[]));

    // False alarm that the unconstrained filter withdraws.
    let fe = [
        "The ferry leaves the harbour every hour.",
        "Tickets can be bought on board.",
        "The crossing takes forty minutes in calm weather.",
    ];
    docs.push(doc("ferry", &fe, Label::No, &[]));
    f.insert(&detect_prompt(&fe), verdict(true, &[fe[0]]));
    f.insert(&detect_prompt(&without(&fe, &[fe[0]])), "{\"judgement\": \"No\", \"evidence\": []}");
    f.insert(&filter_prompt(&[fe[0]], true), evidence_only(&[fe[0]]));
    f.insert(&filter_prompt(&[fe[0]], false), evidence_only(&[]));

    // Correct rejection.
    let li = [
        "The library lends books and maps.",
        "Members may borrow up to ten items.",
        "Late returns carry a small fine.",
    ];
    docs.push(doc("library", &li, Label::No, &[]));
    f.insert(&detect_prompt(&li), verdict(false, &[]));

    // Wrong first guess, right second, then evidence that matches nothing.
    let t = [
        "The tunnel under the river opened in 1988.",
        "It was closed to traffic until 1995.",
        "Cars have used the tunnel since its opening day.",
        "Cyclists must use the bridge instead.",
        "A toll is charged in both directions.",
    ];
    docs.push(doc("tunnel", &t, Label::Yes, &[t[1]]));
    f.insert(&detect_prompt(&t), verdict(true, &[t[4]]));
    let t2 = without(&t, &[t[4]]);
    f.insert(&detect_prompt(&t2), verdict(true, &[t[1]]));
    let t3 = without(&t2, &[t[1]]);
    f.insert(&detect_prompt(&t3), verdict(true, &["The tunnel was never finished."]));
    let tpre = [t[4], t[1], "The tunnel was never finished."];
    f.insert(&filter_prompt(&tpre, true), evidence_only(&[t[1]]));
    f.insert(&filter_prompt(&tpre, false), evidence_only(&[t[4]]));

    // Evidence covers the whole document.
    let g = ["The garden is open all year.", "The garden closes every winter."];
    docs.push(doc("garden", &g, Label::Yes, &[g[0]]));
    f.insert(&detect_prompt(&g), verdict(true, &g));
    f.insert(
        &filter_prompt(&g, true),
        format!("Sure. Here is the answer: {} Hope this helps.", evidence_only(&[g[1]])),
    );
    f.insert(&filter_prompt(&g, false), evidence_only(&[g[0], g[1]]));

    (docs, f)
}

#[test]
fn golden_files() {
    let dir = golden_dir();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(&dir).unwrap();
        let (docs, f) = script();
        std::fs::write(dir.join("dataset.jsonl"), to_jsonl(&docs)).unwrap();
        std::fs::write(dir.join("fixture.json"), f.to_json()).unwrap();
        std::fs::write(dir.join("run.toml"), "backend = \"replay\"\nmodel = \"golden\"\nparallelism = 2\n").unwrap();
        for a in APPROACHES {
            run_and_score(&dir, a, &dir);
        }
    }
    let (docs, f) = script();
    assert_eq!(std::fs::read_to_string(dir.join("dataset.jsonl")).unwrap(), to_jsonl(&docs));
    assert_eq!(std::fs::read_to_string(dir.join("fixture.json")).unwrap(), f.to_json());
    let tmp = tempfile::tempdir().unwrap();
    for a in APPROACHES {
        let (t, r) = run_and_score(&dir, a, tmp.path());
        assert!(t == std::fs::read(dir.join(format!("traces-{a}.jsonl"))).unwrap(), "{a} traces differ");
        assert!(r == std::fs::read(dir.join(format!("report-{a}.json"))).unwrap(), "{a} report differs");
    }
}
