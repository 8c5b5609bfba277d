//! Fixture-driven checks for segmentation, tokenization, boilerplate
//! stripping, preprocessing, and outline parsing.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use outline_eval::corpus::{
    load_corpus, preprocess, strip_boilerplate, BoilerplatePatterns, PreprocessConfig, SkipReason,
};
use outline_eval::pipeline::parse_outline;
use outline_eval::text::{segment, tokenize};

fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    std::fs::read_to_string(path).unwrap()
}

#[derive(Deserialize)]
struct SegCase {
    text: String,
    sentences: Vec<String>,
}

#[test]
fn segmentation_matches_hand_built_fixture() {
    let cases: Vec<SegCase> = serde_json::from_str(&fixture("segmentation.json")).unwrap();
    let total: usize = cases.iter().map(|c| c.sentences.len()).sum();
    assert!(total >= 50, "fixture holds {total} sentences");
    for case in &cases {
        let got: Vec<String> = segment(&case.text).into_iter().map(|s| s.raw).collect();
        assert_eq!(got, case.sentences, "input: {:?}", case.text);
    }
}

#[derive(Deserialize)]
struct TokCase {
    text: String,
    tokens: Vec<String>,
}

#[test]
fn tokenization_matches_hand_built_fixture() {
    let cases: Vec<TokCase> = serde_json::from_str(&fixture("tokenization.json")).unwrap();
    assert!(cases.len() >= 50);
    for case in &cases {
        let got: Vec<String> = tokenize(&case.text)
            .into_iter()
            .map(|t| t.as_str().to_string())
            .collect();
        assert_eq!(got, case.tokens, "input: {:?}", case.text);
    }
}

#[derive(Deserialize)]
struct StripCase {
    article: String,
    expected: String,
}

#[test]
fn boilerplate_fixture_openings() {
    let cases: Vec<StripCase> = serde_json::from_str(&fixture("boilerplate_openings.json")).unwrap();
    assert_eq!(cases.len(), 20);
    let patterns = BoilerplatePatterns::default();
    for case in &cases {
        assert_eq!(
            strip_boilerplate(&case.article, &patterns),
            case.expected,
            "input: {:?}",
            case.article
        );
    }
}

#[test]
fn corpus30_partition_and_boundaries() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus30.jsonl");
    let config = PreprocessConfig::default();
    let mut retained = Vec::new();
    let mut skipped: HashMap<SkipReason, Vec<String>> = HashMap::new();
    let mut input = 0usize;
    for record in load_corpus(&path).unwrap() {
        let record = record.unwrap();
        input += 1;
        match preprocess(&record, &config) {
            Ok(doc) => retained.push(doc),
            Err(reason) => skipped.entry(reason).or_default().push(record.id),
        }
    }
    assert_eq!(input, 30);
    // skip reasons partition the corpus
    let skipped_total: usize = skipped.values().map(Vec::len).sum();
    assert_eq!(retained.len() + skipped_total, input);

    assert!(skipped[&SkipReason::TooShort].contains(&"boundary-63".to_string()));
    assert!(retained.iter().any(|d| d.id == "boundary-64"));
    assert_eq!(skipped[&SkipReason::EmptyAfterStrip].len(), 2);
    assert_eq!(skipped[&SkipReason::EmptyHighlights].len(), 2);

    for doc in &retained {
        assert!(doc.text.len() <= 40);
        assert_eq!(doc.prompt, doc.text[0].raw);
        assert!(!doc.outline.is_empty());
    }
    let long = retained.iter().find(|d| d.id == "long-0").unwrap();
    assert_eq!(long.text.len(), 40);
}

#[derive(Deserialize)]
struct OutlineCase {
    response: String,
    bullets: Vec<String>,
}

#[test]
fn messy_outline_responses_parse() {
    let cases: Vec<OutlineCase> = serde_json::from_str(&fixture("outline_messy.json")).unwrap();
    assert_eq!(cases.len(), 10);
    for case in &cases {
        let got = parse_outline(&case.response, 3).unwrap();
        assert_eq!(got, case.bullets, "response: {:?}", case.response);
    }
}
