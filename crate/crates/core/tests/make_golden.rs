//! Regenerates the end-to-end golden fixtures:
//! `raw5.jsonl`, `replay.jsonl`, and `golden_report.csv`.
//!
//! Run with `cargo test --test make_golden -- --ignored` after changing
//! the mock endpoint script, the prompt templates, or the CLI defaults,
//! then commit the updated fixtures.

mod common;

use std::path::Path;

use outline_eval::cli;
use outline_eval::corpus::read_documents;
use outline_eval::pipeline::{run_generation, GenerationConfig, Mode, RecordingTransport};
use outline_eval::text::AbbreviationList;

fn fixtures_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn raw_records() -> String {
    let mut out = String::new();
    for k in 0..5 {
        let body: String = (0..14)
            .map(|i| format!("Story {k} sentence {i} moves the plot along."))
            .collect::<Vec<_>>()
            .join(" ");
        let head = if k % 2 == 0 { "(CNN) -- " } else { "" };
        let record = serde_json::json!({
            "id": format!("story-{k}"),
            "article": format!("{head}{body}"),
            "highlights": format!("Story {k} begins. Story {k} turns. Story {k} ends."),
        });
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}

/// Must match the flags the acceptance suite passes to `generate`.
fn generation_config() -> GenerationConfig {
    GenerationConfig {
        endpoint: String::new(),
        model: "mock-model".into(),
        mode: Mode::Separate,
        outline_bullets: 3,
        concurrency: 2,
        ..GenerationConfig::default()
    }
}

#[test]
#[ignore = "fixture regeneration, run explicitly"]
fn regenerate_golden_fixtures() {
    let fixtures = fixtures_dir();
    let tmp = tempfile::tempdir().unwrap();

    let raw_path = fixtures.join("raw5.jsonl");
    std::fs::write(&raw_path, raw_records()).unwrap();

    let docs_path = tmp.path().join("docs.jsonl");
    assert_eq!(
        cli::run([
            "outline-eval", "preprocess",
            "--in", raw_path.to_str().unwrap(),
            "--out", docs_path.to_str().unwrap(),
        ]),
        0
    );

    // record the scripted endpoint's answers for every request the CLI
    // will later replay
    let replay_path = fixtures.join("replay.jsonl");
    let documents = read_documents(&docs_path).unwrap();
    let transport = RecordingTransport::create(common::EchoMock, &replay_path).unwrap();
    let run = run_generation(
        &documents,
        &generation_config(),
        &transport,
        &AbbreviationList::default(),
        None,
    )
    .unwrap();
    assert_eq!(run.documents.len(), 5);
    assert!(run.failures.is_empty());
    drop(transport);

    let gen_path = tmp.path().join("generated.jsonl");
    assert_eq!(
        cli::run([
            "outline-eval", "generate",
            "--in", docs_path.to_str().unwrap(),
            "--out", gen_path.to_str().unwrap(),
            "--model", "mock-model",
            "--mode", "separate",
            "--bullets", "3",
            "--concurrency", "2",
            "--replay", replay_path.to_str().unwrap(),
        ]),
        0
    );

    let report_json = tmp.path().join("report.json");
    let report_csv = tmp.path().join("report.csv");
    assert_eq!(
        cli::run([
            "outline-eval", "eval",
            "--in", gen_path.to_str().unwrap(),
            "--refs", docs_path.to_str().unwrap(),
            "--out", report_json.to_str().unwrap(),
            "--csv", report_csv.to_str().unwrap(),
        ]),
        0
    );
    std::fs::copy(&report_csv, fixtures.join("golden_report.csv")).unwrap();
}
