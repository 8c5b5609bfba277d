//! Two-stage outline-then-text generation against a chat-completion
//! endpoint.
//!
//! "All-in" mode sends the prompt plus the whole outline in one request;
//! "separate" mode generates one segment per bullet in order, feeding the
//! text so far back in, which forces each bullet into its own region of
//! the output. A record/replay transport keeps every test and rerun off
//! live endpoints.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Document, Provenance, Source};
use crate::error::{Error, Result};
use crate::text::AbbreviationList;

/// Environment variable holding the API key; never accepted via flag or
/// config file.
pub const API_KEY_ENV: &str = "OUTLINE_EVAL_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    AllIn,
    Separate,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::AllIn => f.write_str("all-in"),
            Mode::Separate => f.write_str("separate"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-in" | "allin" => Ok(Mode::AllIn),
            "separate" => Ok(Mode::Separate),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

pub const DEFAULT_OUTLINE_TEMPLATE: &str = include_str!("../data/templates/outline.txt");
pub const DEFAULT_ALLIN_TEMPLATE: &str = include_str!("../data/templates/allin.txt");
pub const DEFAULT_SEGMENT_TEMPLATE: &str = include_str!("../data/templates/segment.txt");

/// The three prompt templates with `{placeholder}` substitution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Templates {
    pub outline: String,
    pub allin: String,
    pub segment: String,
}

impl Default for Templates {
    fn default() -> Self {
        Templates {
            outline: DEFAULT_OUTLINE_TEMPLATE.to_string(),
            allin: DEFAULT_ALLIN_TEMPLATE.to_string(),
            segment: DEFAULT_SEGMENT_TEMPLATE.to_string(),
        }
    }
}

impl Templates {
    pub fn validate(&self) -> Result<()> {
        let required: [(&str, &str, &[&str]); 3] = [
            ("outline_template", &self.outline, &["prompt"]),
            ("allin_template", &self.allin, &["prompt", "outline"]),
            ("segment_template", &self.segment, &["prompt", "bullet", "so_far"]),
        ];
        for (name, template, placeholders) in required {
            for ph in placeholders {
                if !template.contains(&format!("{{{ph}}}")) {
                    return Err(Error::MissingPlaceholder {
                        name: name.to_string(),
                        placeholder: ph.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

pub fn render_template(template: &str, substitutions: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in substitutions {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

/// Everything needed to run generation for a corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub endpoint: String,
    pub model: String,
    pub mode: Mode,
    /// Target bullet count m for outline prediction.
    pub outline_bullets: usize,
    pub temperature: f64,
    pub max_tokens: usize,
    pub concurrency: usize,
    pub retries: u32,
    pub backoff_ms: Vec<u64>,
    pub templates: Templates,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            endpoint: String::new(),
            model: String::new(),
            mode: Mode::AllIn,
            outline_bullets: 3,
            temperature: 0.7,
            max_tokens: 1024,
            concurrency: 1,
            retries: 3,
            backoff_ms: vec![250, 1000, 4000],
            templates: Templates::default(),
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.concurrency < 1 {
            return Err(Error::InvalidConfig("concurrency must be >= 1".into()));
        }
        if self.outline_bullets < 1 {
            return Err(Error::InvalidConfig("outline_bullets must be >= 1".into()));
        }
        self.templates.validate()
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let ms = self
            .backoff_ms
            .get(attempt as usize)
            .or(self.backoff_ms.last())
            .copied()
            .unwrap_or(0);
        Duration::from_millis(ms)
    }
}

/// OpenAI-compatible chat completion request body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatRequest {
    pub fn user(config: &GenerationConfig, content: String) -> Self {
        ChatRequest {
            model: config.model.clone(),
            messages: vec![ChatMessage {
                role: "user".into(),
                content,
            }],
            temperature: config.temperature,
            max_tokens: config.max_tokens,
        }
    }
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Debug, Deserialize)]
struct ChatResponseMessage {
    content: String,
}

/// Extract `choices[0].message.content` from a response body.
pub fn extract_content(body: &str) -> std::result::Result<String, TransportFailure> {
    let parsed: ChatResponse = serde_json::from_str(body).map_err(|e| TransportFailure {
        message: format!("malformed completion body: {e}"),
        retryable: false,
    })?;
    parsed
        .choices
        .into_iter()
        .next()
        .map(|c| c.message.content)
        .ok_or_else(|| TransportFailure {
            message: "completion body has no choices".into(),
            retryable: false,
        })
}

/// Stable hash identifying a request for record/replay.
pub fn request_hash(request: &ChatRequest) -> String {
    let canonical = serde_json::to_string(request).expect("request serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    format!("{digest:x}")
}

#[derive(Debug, Clone)]
pub struct TransportFailure {
    pub message: String,
    pub retryable: bool,
}

/// One round trip: send a request body, get the raw response body back.
pub trait Transport: Send + Sync {
    fn send(&self, request: &ChatRequest) -> std::result::Result<String, TransportFailure>;
}

/// Live HTTP transport for any OpenAI-compatible endpoint.
pub struct HttpTransport {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    /// Reads the API key from [`API_KEY_ENV`] if set.
    pub fn new(endpoint: &str) -> Self {
        HttpTransport {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl Transport for HttpTransport {
    fn send(&self, request: &ChatRequest) -> std::result::Result<String, TransportFailure> {
        let url = format!("{}/chat/completions", self.endpoint);
        let mut builder = self.client.post(&url).json(request);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| TransportFailure {
            message: e.to_string(),
            retryable: true,
        })?;
        let status = response.status();
        let body = response.text().map_err(|e| TransportFailure {
            message: e.to_string(),
            retryable: true,
        })?;
        if status.is_success() {
            Ok(body)
        } else {
            Err(TransportFailure {
                message: format!("HTTP {status}: {body}"),
                retryable: status.as_u16() == 429 || status.is_server_error(),
            })
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ReplayEntry {
    request_hash: String,
    response_body: String,
}

/// Replays previously recorded response bodies keyed by request hash.
pub struct ReplayTransport {
    entries: HashMap<String, String>,
}

impl ReplayTransport {
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = HashMap::new();
        for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: ReplayEntry =
                serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            entries.insert(entry.request_hash, entry.response_body);
        }
        Ok(ReplayTransport { entries })
    }
}

impl Transport for ReplayTransport {
    fn send(&self, request: &ChatRequest) -> std::result::Result<String, TransportFailure> {
        let hash = request_hash(request);
        self.entries.get(&hash).cloned().ok_or(TransportFailure {
            message: format!("no replay entry for request hash {hash}"),
            retryable: false,
        })
    }
}

/// Wraps a transport and appends every successful exchange to a replay
/// JSONL file.
pub struct RecordingTransport<T: Transport> {
    inner: T,
    sink: Mutex<std::io::BufWriter<std::fs::File>>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn create(inner: T, path: &Path) -> Result<Self> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(RecordingTransport {
            inner,
            sink: Mutex::new(std::io::BufWriter::new(file)),
        })
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn send(&self, request: &ChatRequest) -> std::result::Result<String, TransportFailure> {
        let body = self.inner.send(request)?;
        let entry = ReplayEntry {
            request_hash: request_hash(request),
            response_body: body.clone(),
        };
        let mut sink = self.sink.lock().unwrap();
        serde_json::to_writer(&mut *sink, &entry).ok();
        sink.write_all(b"\n").ok();
        sink.flush().ok();
        Ok(body)
    }
}

/// One request/response exchange kept for auditability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEntry {
    pub request: ChatRequest,
    pub response: String,
    pub latency_ms: u64,
    pub attempts: u32,
}

/// Full request log for one document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationTrace {
    pub doc_id: String,
    pub mode: Mode,
    pub entries: Vec<TraceEntry>,
}

fn send_with_retry(
    transport: &dyn Transport,
    config: &GenerationConfig,
    request: &ChatRequest,
) -> Result<TraceEntry> {
    let started = Instant::now();
    let mut attempts = 0;
    loop {
        attempts += 1;
        match transport.send(request) {
            Ok(body) => {
                let content = extract_content(&body).map_err(|f| Error::Transport {
                    attempts,
                    message: f.message,
                })?;
                return Ok(TraceEntry {
                    request: request.clone(),
                    response: content,
                    latency_ms: started.elapsed().as_millis() as u64,
                    attempts,
                });
            }
            Err(failure) => {
                if !failure.retryable || attempts > config.retries {
                    return Err(Error::Transport {
                        attempts,
                        message: failure.message,
                    });
                }
                std::thread::sleep(config.backoff(attempts - 1));
            }
        }
    }
}

/// Parse an LLM outline response into exactly `m` bullets.
///
/// First pass takes numbered or dashed list lines; if that yields fewer
/// than `m`, fall back to plain non-empty lines.
pub fn parse_outline(response: &str, m: usize) -> Result<Vec<String>> {
    let list_re = regex::Regex::new(r"^\s*(?:\d+\s*[.):]|[-*•])\s*(.+?)\s*$").unwrap();
    let listed: Vec<String> = response
        .lines()
        .filter_map(|l| list_re.captures(l).map(|c| c[1].to_string()))
        .collect();
    if listed.len() >= m {
        return Ok(listed.into_iter().take(m).collect());
    }
    let lines: Vec<String> = response
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    if lines.len() >= m {
        return Ok(lines.into_iter().take(m).collect());
    }
    Err(Error::OutlineParse {
        expected: m,
        got: lines.len().max(listed.len()),
        raw: response.to_string(),
    })
}

/// Stage one: predict the outline from the prompt.
pub fn predict_outline(
    prompt: &str,
    config: &GenerationConfig,
    transport: &dyn Transport,
    trace: &mut Vec<TraceEntry>,
) -> Result<Vec<String>> {
    let m = config.outline_bullets;
    let rendered = render_template(
        &config.templates.outline,
        &[("prompt", prompt), ("m", &m.to_string())],
    );
    let request = ChatRequest::user(config, rendered);
    let mut last_err = None;
    for _ in 0..=config.retries {
        let entry = send_with_retry(transport, config, &request)?;
        let response = entry.response.clone();
        trace.push(entry);
        match parse_outline(&response, m) {
            Ok(bullets) => return Ok(bullets),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::OutlineParse {
        expected: m,
        got: 0,
        raw: String::new(),
    }))
}

/// Stage two, all-in: one request carrying prompt plus the whole outline.
pub fn generate_all_in(
    prompt: &str,
    outline: &[String],
    config: &GenerationConfig,
    transport: &dyn Transport,
    trace: &mut Vec<TraceEntry>,
) -> Result<String> {
    if outline.is_empty() {
        return Err(Error::EmptyOutline);
    }
    let outline_block = outline
        .iter()
        .enumerate()
        .map(|(i, b)| format!("{}. {b}", i + 1))
        .collect::<Vec<_>>()
        .join("\n");
    let rendered = render_template(
        &config.templates.allin,
        &[("prompt", prompt), ("outline", &outline_block)],
    );
    let entry = send_with_retry(transport, config, &ChatRequest::user(config, rendered))?;
    let text = entry.response.clone();
    trace.push(entry);
    Ok(text)
}

/// Stage two, separate: one sequential request per bullet, each seeing the
/// text generated so far. A mid-document failure carries the completed
/// segment count.
pub fn generate_separate(
    doc_id: &str,
    prompt: &str,
    outline: &[String],
    config: &GenerationConfig,
    transport: &dyn Transport,
    trace: &mut Vec<TraceEntry>,
) -> Result<String> {
    if outline.is_empty() {
        return Err(Error::EmptyOutline);
    }
    let mut segments: Vec<String> = Vec::with_capacity(outline.len());
    for (j, bullet) in outline.iter().enumerate() {
        let so_far = segments.join(" ");
        let rendered = render_template(
            &config.templates.segment,
            &[("prompt", prompt), ("bullet", bullet), ("so_far", &so_far)],
        );
        match send_with_retry(transport, config, &ChatRequest::user(config, rendered)) {
            Ok(entry) => {
                segments.push(entry.response.trim().to_string());
                trace.push(entry);
            }
            Err(e) => {
                return Err(Error::PartialGeneration {
                    doc_id: doc_id.to_string(),
                    completed: j,
                    total: outline.len(),
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(segments.join(" "))
}

/// Run both stages for one document.
pub fn generate_document(
    doc: &Document,
    config: &GenerationConfig,
    transport: &dyn Transport,
    abbreviations: &AbbreviationList,
) -> Result<(Document, GenerationTrace)> {
    let mut entries = Vec::new();
    let outline = predict_outline(&doc.prompt, config, transport, &mut entries)?;
    let text = match config.mode {
        Mode::AllIn => generate_all_in(&doc.prompt, &outline, config, transport, &mut entries)?,
        Mode::Separate => {
            generate_separate(&doc.id, &doc.prompt, &outline, config, transport, &mut entries)?
        }
    };
    let sentences = crate::text::segment_sentences(&text, abbreviations);
    let generated = Document {
        id: doc.id.clone(),
        prompt: doc.prompt.clone(),
        outline: outline
            .iter()
            .enumerate()
            .map(|(i, b)| crate::text::Sentence::from_raw(i, b.clone()))
            .collect(),
        text: sentences,
        source: Source::Generated,
        provenance: Some(Provenance {
            endpoint: config.endpoint.clone(),
            model: config.model.clone(),
            mode: config.mode.to_string(),
            outline_predicted: true,
        }),
    };
    Ok((
        generated,
        GenerationTrace {
            doc_id: doc.id.clone(),
            mode: config.mode,
            entries,
        },
    ))
}

/// Newline-delimited list of completed doc ids; lets a killed run resume
/// without regenerating anything.
pub struct Checkpoint {
    path: PathBuf,
    completed: HashSet<String>,
    writer: Mutex<std::io::BufWriter<std::fs::File>>,
}

impl Checkpoint {
    pub fn open(path: &Path) -> Result<Self> {
        let completed = if path.exists() {
            std::fs::read_to_string(path)
                .map_err(|e| Error::io(path, e))?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect()
        } else {
            HashSet::new()
        };
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Checkpoint {
            path: path.to_path_buf(),
            completed,
            writer: Mutex::new(std::io::BufWriter::new(file)),
        })
    }

    pub fn contains(&self, id: &str) -> bool {
        self.completed.contains(id)
    }

    pub fn record(&self, id: &str) -> Result<()> {
        let mut w = self.writer.lock().unwrap();
        writeln!(w, "{id}").map_err(|e| Error::io(&self.path, e))?;
        w.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Outcome of a corpus generation run.
pub struct GenerationRun {
    /// Newly generated documents, in input order.
    pub documents: Vec<Document>,
    pub traces: Vec<GenerationTrace>,
    pub skipped_completed: usize,
    pub failures: Vec<(String, Error)>,
}

/// Generate a whole corpus with at most `config.concurrency` documents in
/// flight. Output order equals input order regardless of completion order;
/// documents already in the checkpoint are skipped.
pub fn run_generation(
    documents: &[Document],
    config: &GenerationConfig,
    transport: &dyn Transport,
    abbreviations: &AbbreviationList,
    checkpoint: Option<&Checkpoint>,
) -> Result<GenerationRun> {
    config.validate()?;
    let todo: Vec<&Document> = documents
        .iter()
        .filter(|d| checkpoint.is_none_or(|c| !c.contains(&d.id)))
        .collect();
    let skipped_completed = documents.len() - todo.len();

    let next = Mutex::new(0usize);
    let slots: Mutex<Vec<Option<std::result::Result<(Document, GenerationTrace), (String, Error)>>>> =
        Mutex::new((0..todo.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..config.concurrency.min(todo.len().max(1)) {
            scope.spawn(|| loop {
                let i = {
                    let mut n = next.lock().unwrap();
                    if *n >= todo.len() {
                        return;
                    }
                    let i = *n;
                    *n += 1;
                    i
                };
                let doc = todo[i];
                let outcome = generate_document(doc, config, transport, abbreviations)
                    .map_err(|e| (doc.id.clone(), e));
                if outcome.is_ok() {
                    if let Some(c) = checkpoint {
                        c.record(&doc.id).ok();
                    }
                }
                slots.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    let mut run = GenerationRun {
        documents: Vec::new(),
        traces: Vec::new(),
        skipped_completed,
        failures: Vec::new(),
    };
    for slot in slots.into_inner().unwrap() {
        match slot.expect("every slot filled") {
            Ok((doc, trace)) => {
                run.documents.push(doc);
                run.traces.push(trace);
            }
            Err(failure) => run.failures.push(failure),
        }
    }
    Ok(run)
}
