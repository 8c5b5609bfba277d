//! Corpus ingestion: raw article/summary pairs, boilerplate stripping, and
//! the preprocessing that turns them into evaluation-ready documents
//! (first sentence as prompt, word-count filter, sentence cutoff).

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{segment_sentences, AbbreviationList, Sentence, Token};

/// One raw corpus record: an article and its summary highlights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub article: String,
    pub highlights: String,
}

/// Where a document's text came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Reference,
    Generated,
}

/// Metadata attached to generated documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub endpoint: String,
    pub model: String,
    pub mode: String,
    pub outline_predicted: bool,
}

/// A preprocessed document: prompt, outline bullets, and sentence-segmented
/// text, either reference or generated.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub prompt: String,
    pub outline: Vec<Sentence>,
    pub text: Vec<Sentence>,
    pub source: Source,
    pub provenance: Option<Provenance>,
}

/// Wire form of [`Document`]: sentences as raw strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct DocumentRecord {
    id: String,
    prompt: String,
    outline: Vec<String>,
    text: Vec<String>,
    source: Source,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        prompt: impl Into<String>,
        outline: Vec<String>,
        text: Vec<String>,
        source: Source,
        provenance: Option<Provenance>,
    ) -> Self {
        Document {
            id: id.into(),
            prompt: prompt.into(),
            outline: raws_to_sentences(outline),
            text: raws_to_sentences(text),
            source,
            provenance,
        }
    }

    /// All text tokens, in sentence order.
    pub fn text_tokens(&self) -> Vec<Token> {
        self.text.iter().flat_map(|s| s.tokens.clone()).collect()
    }

    pub fn outline_raws(&self) -> Vec<String> {
        self.outline.iter().map(|s| s.raw.clone()).collect()
    }

    pub fn text_raws(&self) -> Vec<String> {
        self.text.iter().map(|s| s.raw.clone()).collect()
    }
}

fn raws_to_sentences(raws: Vec<String>) -> Vec<Sentence> {
    raws.into_iter()
        .enumerate()
        .map(|(i, raw)| Sentence::from_raw(i, raw))
        .collect()
}

impl Serialize for Document {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DocumentRecord {
            id: self.id.clone(),
            prompt: self.prompt.clone(),
            outline: self.outline_raws(),
            text: self.text_raws(),
            source: self.source,
            provenance: self.provenance.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Document {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = DocumentRecord::deserialize(deserializer)?;
        Ok(Document {
            id: rec.id,
            prompt: rec.prompt,
            outline: raws_to_sentences(rec.outline),
            text: raws_to_sentences(rec.text),
            source: rec.source,
            provenance: rec.provenance,
        })
    }
}

/// Why a record was dropped during preprocessing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    TooShort,
    EmptyAfterStrip,
    EmptyHighlights,
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SkipReason::TooShort => f.write_str("too-short"),
            SkipReason::EmptyAfterStrip => f.write_str("empty-after-strip"),
            SkipReason::EmptyHighlights => f.write_str("empty-highlights"),
        }
    }
}

pub const DEFAULT_BOILERPLATE_PATTERNS: &str = include_str!("../data/boilerplate_patterns.txt");

/// Compiled head-of-article boilerplate patterns.
#[derive(Debug, Clone)]
pub struct BoilerplatePatterns {
    patterns: Vec<Regex>,
}

impl Default for BoilerplatePatterns {
    fn default() -> Self {
        Self::parse(DEFAULT_BOILERPLATE_PATTERNS).expect("default patterns compile")
    }
}

impl BoilerplatePatterns {
    /// Parse the one-pattern-per-line file format; `#` starts a comment.
    pub fn parse(contents: &str) -> Result<Self> {
        let mut patterns = Vec::new();
        for line in contents.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let re = Regex::new(line).map_err(|source| Error::InvalidPattern {
                pattern: line.to_string(),
                source,
            })?;
            patterns.push(re);
        }
        Ok(BoilerplatePatterns { patterns })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&contents)
    }
}

/// Strip dataset boilerplate from the head of an article. Patterns are
/// re-applied until none match, so stacked datelines and bylines all go.
pub fn strip_boilerplate(article: &str, patterns: &BoilerplatePatterns) -> String {
    let mut text = article.trim_start();
    loop {
        let mut changed = false;
        for re in &patterns.patterns {
            if let Some(m) = re.find(text) {
                if m.start() == 0 && m.end() > 0 {
                    text = &text[m.end()..];
                    changed = true;
                }
            }
        }
        if !changed {
            return text.to_string();
        }
    }
}

/// Preprocessing knobs; the defaults mirror the standard recipe
/// (64-word minimum, 40-sentence cutoff).
#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub min_words: usize,
    pub max_sentences: usize,
    pub patterns: BoilerplatePatterns,
    pub abbreviations: AbbreviationList,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            min_words: 64,
            max_sentences: 40,
            patterns: BoilerplatePatterns::default(),
            abbreviations: AbbreviationList::default(),
        }
    }
}

/// Turn one raw record into a reference [`Document`], or a typed skip.
///
/// Word count is over whitespace-split tokens of the stripped article;
/// "less than `min_words`" is exclusive, so a 64-word article passes at the
/// default threshold.
pub fn preprocess(record: &RawRecord, config: &PreprocessConfig) -> std::result::Result<Document, SkipReason> {
    let stripped = strip_boilerplate(&record.article, &config.patterns);
    if stripped.trim().is_empty() {
        return Err(SkipReason::EmptyAfterStrip);
    }
    if stripped.split_whitespace().count() < config.min_words {
        return Err(SkipReason::TooShort);
    }
    let mut sentences = segment_sentences(&stripped, &config.abbreviations);
    if sentences.is_empty() {
        return Err(SkipReason::EmptyAfterStrip);
    }
    sentences.truncate(config.max_sentences);
    let outline = segment_sentences(&record.highlights, &config.abbreviations);
    if outline.is_empty() {
        return Err(SkipReason::EmptyHighlights);
    }
    let prompt = sentences[0].raw.clone();
    Ok(Document {
        id: record.id.clone(),
        prompt,
        outline,
        text: sentences,
        source: Source::Reference,
        provenance: None,
    })
}

/// Streaming JSONL reader; yields `(line_number, parse result)` so strict
/// and continue-on-error callers both get diagnostics.
pub struct JsonlReader<T> {
    lines: std::iter::Enumerate<std::io::Lines<BufReader<std::fs::File>>>,
    path: std::path::PathBuf,
    _marker: std::marker::PhantomData<T>,
}

impl<T: serde::de::DeserializeOwned> JsonlReader<T> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(JsonlReader {
            lines: BufReader::new(file).lines().enumerate(),
            path: path.to_path_buf(),
            _marker: std::marker::PhantomData,
        })
    }
}

impl<T: serde::de::DeserializeOwned> Iterator for JsonlReader<T> {
    type Item = Result<T>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (idx, line) = self.lines.next()?;
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            };
            if line.trim().is_empty() {
                continue;
            }
            return Some(serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                path: self.path.clone(),
                line: idx + 1,
                message: e.to_string(),
            }));
        }
    }
}

/// Open a raw-record JSONL corpus as a stream.
pub fn load_corpus(path: &Path) -> Result<JsonlReader<RawRecord>> {
    JsonlReader::open(path)
}

/// Open a canonical Document JSONL corpus as a stream.
pub fn load_documents(path: &Path) -> Result<JsonlReader<Document>> {
    JsonlReader::open(path)
}

/// Read a whole Document corpus into memory, strict mode.
pub fn read_documents(path: &Path) -> Result<Vec<Document>> {
    load_documents(path)?.collect()
}

/// Write items as JSONL, one object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, article: &str, highlights: &str) -> RawRecord {
        RawRecord {
            id: id.into(),
            article: article.into(),
            highlights: highlights.into(),
        }
    }

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("word{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn strips_cnn_dateline() {
        let p = BoilerplatePatterns::default();
        assert_eq!(strip_boilerplate("(CNN) -- A storm hit.", &p), "A storm hit.");
        assert_eq!(strip_boilerplate("A storm hit.", &p), "A storm hit.");
        assert_eq!(strip_boilerplate("", &p), "");
    }

    #[test]
    fn strips_stacked_byline_blocks() {
        let p = BoilerplatePatterns::default();
        let article = "By . Daily Mail Reporter . PUBLISHED: . 09:12 EST, 2 March 2013 . A dog barked.";
        assert_eq!(strip_boilerplate(article, &p), "A dog barked.");
    }

    #[test]
    fn boilerplate_only_matches_head() {
        let p = BoilerplatePatterns::default();
        let article = "A report said (CNN) -- something.";
        assert_eq!(strip_boilerplate(article, &p), article);
    }

    #[test]
    fn invalid_pattern_rejected_at_load() {
        assert!(BoilerplatePatterns::parse("([unclosed").is_err());
    }

    #[test]
    fn word_count_boundary() {
        let cfg = PreprocessConfig::default();
        let r63 = record("a", &format!("{}.", words(63)), "Highlight one.");
        // the trailing period is attached to the last word, so this is 63 words
        assert_eq!(preprocess(&r63, &cfg).unwrap_err(), SkipReason::TooShort);
        let r64 = record("b", &format!("{}.", words(64)), "Highlight one.");
        assert!(preprocess(&r64, &cfg).is_ok());
    }

    #[test]
    fn sentence_cutoff_and_prompt() {
        let cfg = PreprocessConfig::default();
        let article: String = (0..55)
            .map(|i| format!("Sentence number {i} has five words."))
            .collect::<Vec<_>>()
            .join(" ");
        let doc = preprocess(&record("c", &article, "One. Two."), &cfg).unwrap();
        assert_eq!(doc.text.len(), 40);
        assert_eq!(doc.prompt, "Sentence number 0 has five words.");
        assert_eq!(doc.prompt, doc.text[0].raw);
        assert_eq!(doc.outline.len(), 2);
    }

    #[test]
    fn prompt_extracted_after_strip() {
        let cfg = PreprocessConfig::default();
        let article = format!("(CNN) -- The first real sentence. {}", words(70));
        let doc = preprocess(&record("d", &article, "H."), &cfg).unwrap();
        assert_eq!(doc.prompt, "The first real sentence.");
    }

    #[test]
    fn empty_highlights_skip() {
        let cfg = PreprocessConfig::default();
        let r = record("e", &format!("{}.", words(80)), "   ");
        assert_eq!(preprocess(&r, &cfg).unwrap_err(), SkipReason::EmptyHighlights);
    }

    #[test]
    fn preprocess_idempotent_on_own_output() {
        let cfg = PreprocessConfig::default();
        let article: String = (0..20)
            .map(|i| format!("Sentence number {i} carries six whole words."))
            .collect::<Vec<_>>()
            .join(" ");
        let doc = preprocess(&record("f", &article, "One. Two."), &cfg).unwrap();
        let rendered = doc.text_raws().join(" ");
        let again = preprocess(&record("f", &rendered, "One. Two."), &cfg).unwrap();
        assert_eq!(doc.text_raws(), again.text_raws());
        assert_eq!(doc.prompt, again.prompt);
    }

    #[test]
    fn jsonl_roundtrip_and_line_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(
            &path,
            "{\"id\":\"1\",\"article\":\"A.\",\"highlights\":\"H.\"}\nnot json\n{\"id\":\"3\",\"article\":\"C.\",\"highlights\":\"H.\"}\n",
        )
        .unwrap();
        let items: Vec<Result<RawRecord>> = load_corpus(&path).unwrap().collect();
        assert_eq!(items.len(), 3);
        assert!(items[0].is_ok());
        match items[1].as_ref().unwrap_err() {
            Error::MalformedLine { line, .. } => assert_eq!(*line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        assert_eq!(items[2].as_ref().unwrap().id, "3");
    }

    #[test]
    fn streaming_preserves_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("big.jsonl");
        let records: Vec<RawRecord> = (0..1000)
            .map(|i| record(&format!("id-{i:04}"), "Article text.", "H."))
            .collect();
        write_jsonl(&path, records.iter()).unwrap();
        let streamed: Vec<String> = load_corpus(&path)
            .unwrap()
            .map(|r| r.unwrap().id)
            .collect();
        let naive: Vec<String> = std::fs::read_to_string(&path)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str::<RawRecord>(l).unwrap().id)
            .collect();
        assert_eq!(streamed, naive);
    }

    #[test]
    fn document_serde_roundtrip() {
        let doc = Document::new(
            "x1",
            "First sentence.",
            vec!["Bullet one.".into(), "Bullet two.".into()],
            vec!["First sentence.".into(), "Second sentence.".into()],
            Source::Reference,
            None,
        );
        let json = serde_json::to_string(&doc).unwrap();
        let back: Document = serde_json::from_str(&json).unwrap();
        assert_eq!(doc, back);
        assert_eq!(back.text[1].index, 1);
    }
}
