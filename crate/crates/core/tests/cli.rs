mod common;

use std::path::Path;
use std::process::{Command, Output};

use chrono::{TimeZone, Utc};
use revertrisk::corpus::{read_jsonl, write_jsonl, EditorInfo, RevisionRecord};
use revertrisk::diff::{ContentDelta, DeltaTarget};
use revertrisk::entity::{ItemId, LanguageCode};
use revertrisk::graph2text::TextualizedChange;
use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revertrisk")).args(args).output().unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).display().to_string()
}

fn record(id: u64, entity: u64, editor: &str, minute: i64) -> RevisionRecord {
    RevisionRecord {
        revision_id: id,
        entity_id: ItemId::new(entity).unwrap(),
        timestamp: Utc.timestamp_opt(1_650_000_000 + minute * 60, 0).unwrap(),
        parent_revision_id: None,
        editor: EditorInfo::registered(editor, Utc.timestamp_opt(1_500_000_000, 0).unwrap(), 500),
        tags: ["wikidata-ui".to_owned()].into(),
        deltas: vec![ContentDelta::insert_text(DeltaTarget::Label(LanguageCode::new("en").unwrap()), format!("v{id}")).unwrap()],
        reverted: false,
        reverting_editor: None,
        is_revert_of: None,
        entity_is_human: Some(false),
    }
}

#[test]
fn diff_of_identical_files_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("doc.json");
    std::fs::write(&doc, common::bulgaria("Q219", "Q207843").to_string()).unwrap();
    let out = cli(&["diff", doc.to_str().unwrap(), doc.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let deltas: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(deltas, Value::Array(vec![]));
}

#[test]
fn diff_then_textualize_the_anthem_edit() {
    let dir = tempfile::tempdir().unwrap();
    let (parent, current) = (dir.path().join("p.json"), dir.path().join("c.json"));
    std::fs::write(&parent, common::bulgaria("Q219", "Q207843").to_string()).unwrap();
    std::fs::write(&current, common::bulgaria("Q219", "Q30588468").to_string()).unwrap();
    let out = cli(&["diff", parent.to_str().unwrap(), current.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let deltas = dir.path().join("deltas.json");
    std::fs::write(&deltas, &out.stdout).unwrap();
    let labels = dir.path().join("labels.tsv");
    common::anthem_labels().write_tsv(std::fs::File::create(&labels).unwrap()).unwrap();

    let out = cli(&["textualize", deltas.to_str().unwrap(), "--labels", labels.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let texts: Vec<TextualizedChange> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(texts.len(), 1);
    assert_eq!(texts[0].full_text, "change statement: anthem old: Mila Rodino new: Despacito");

    let out = cli(&["textualize", deltas.to_str().unwrap()]);
    let texts: Vec<TextualizedChange> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(texts[0].full_text, "change statement: unknown old: unknown new: unknown");
}

#[test]
fn prepare_drops_the_edit_war_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = record(1, 7, "A", 0);
    a.reverted = true;
    a.reverting_editor = Some("B".into());
    let mut b = record(2, 7, "B", 5);
    b.reverted = true;
    b.reverting_editor = Some("A".into());
    b.is_revert_of = Some(1);
    let mut c = record(3, 7, "A", 9);
    c.is_revert_of = Some(2);
    let bystander = record(4, 8, "C", 12);
    let input = dir.path().join("records.jsonl");
    write_jsonl(&input, &[a, b, c, bystander]).unwrap();

    let out_dir = dir.path().join("out");
    let out = cli(&["prepare", input.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap(), "--filter-only"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let kept: Vec<RevisionRecord> = read_jsonl(out_dir.join("filtered.jsonl")).unwrap();
    assert_eq!(kept.iter().map(|r| r.revision_id).collect::<Vec<_>>(), vec![4]);
    let report: Value = serde_json::from_slice(&std::fs::read(out_dir.join("filter_report.json")).unwrap()).unwrap();
    assert_eq!(report["edit_war_removed"], 3);
}

#[test]
fn evaluate_matches_golden_report() {
    let out = cli(&[
        "--seed",
        "5",
        "evaluate",
        &fixture("scored.jsonl"),
        "--resamples",
        "200",
        "--resample-size",
        "60",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let golden: Value = serde_json::from_slice(&std::fs::read(fixture("report.golden.json")).unwrap()).unwrap();
    assert_eq!(report, golden);

    for key in [
        "n_rows",
        "n_positives",
        "auc",
        "auc_ci_low",
        "auc_ci_high",
        "fr",
        "dir",
        "dauc",
        "dauc_convention",
        "per_slice_auc",
    ] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    // Pairwise AUC straight from the fixture.
    let rows: Vec<Value> = std::fs::read_to_string(fixture("scored.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let (mut num, mut den) = (0.0, 0.0);
    for p in rows.iter().filter(|r| r["label"] == 1) {
        for n in rows.iter().filter(|r| r["label"] == 0) {
            let (sp, sn) = (p["score"].as_f64().unwrap(), n["score"].as_f64().unwrap());
            num += if sp > sn { 1.0 } else if sp == sn { 0.5 } else { 0.0 };
            den += 1.0;
        }
    }
    assert!((report["auc"].as_f64().unwrap() - num / den).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cli(&["diff", "only-one"]).status.code(), Some(1));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
    let missing = cli(&["diff", "/nonexistent/a.json", "/nonexistent/b.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/a.json"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"id\": \"nope\"}").unwrap();
    assert_eq!(cli(&["diff", bad.to_str().unwrap(), bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(
        cli(&["serve", "--content-model", "/nonexistent/c.json"]).status.code(),
        Some(1)
    );
}

#[test]
fn ingest_then_score() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.jsonl");
    let request = common::anthem_request();
    let line = serde_json::json!({
        "revision_id": 1002,
        "timestamp": "2023-03-01T12:00:00Z",
        "editor": request["metadata"]["editor"],
        "tags": ["wikidata-ui"],
        "parent_content": request["parent"].to_string(),
        "current_content": request["current"],
        "reverted": true,
    });
    std::fs::write(&raw, format!("{line}\n")).unwrap();
    let records = dir.path().join("records.jsonl.gz");
    let out = cli(&["ingest", raw.to_str().unwrap(), "-o", records.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let ingested: Vec<RevisionRecord> = read_jsonl(&records).unwrap();
    assert_eq!(ingested.len(), 1);
    assert_eq!(ingested[0].deltas.len(), 1);

    let (content, final_model, labels) = common::write_models(dir.path());
    let scored = dir.path().join("scored.jsonl");
    let out = cli(&[
        "score",
        records.to_str().unwrap(),
        "--content-model",
        content.to_str().unwrap(),
        "--final-model",
        final_model.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "-o",
        scored.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<Value> = read_jsonl(&scored).unwrap();
    assert_eq!(rows[0]["label"], 1);
    assert_eq!(rows[0]["groups"]["editor"], "anonymous");
    let p = rows[0]["score"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
}
