//! The `outline-eval` command line: preprocess, generate, align, eval,
//! synth, and report subcommands over the canonical JSONL formats.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::corpus::{
    load_corpus, preprocess, read_documents, write_jsonl, BoilerplatePatterns, Document,
    PreprocessConfig, SkipReason,
};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_corpus, Metric, MetricReport};
use crate::pipeline::{
    run_generation, Checkpoint, GenerationConfig, HttpTransport, Mode, RecordingTransport,
    ReplayTransport, Templates, Transport,
};
use crate::report::{render_heatmap, write_tables, HeatmapSpec};
use crate::similarity::{alignment_matrix, AlignmentMatrix, EmbeddingTable, SimilarityBackend};
use crate::synth::{sweep, synthesize, write_sweep_csv, SynthProfile};
use crate::text::AbbreviationList;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_ENDPOINT: i32 = 3;
pub const EXIT_METRIC: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "outline-eval", version, about = "Outline-utilization metrics and two-stage generation")]
struct Cli {
    /// Optional JSON config file; explicit flags win over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Turn raw {id, article, highlights} JSONL into canonical documents.
    Preprocess(PreprocessArgs),
    /// Run two-stage generation for a document corpus.
    Generate(GenerateArgs),
    /// Emit per-document alignment heatmaps and matrix JSON.
    Align(AlignArgs),
    /// Compute ROUGE/BLEU/DV/PD over a corpus.
    Eval(EvalArgs),
    /// Build synthetic corpora with controlled outline-usage profiles.
    Synth(SynthArgs),
    /// Render metric reports as a comparison table.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    min_words: Option<usize>,
    #[arg(long)]
    max_sentences: Option<usize>,
    /// Boilerplate pattern file; defaults ship in the binary.
    #[arg(long)]
    patterns: Option<PathBuf>,
    /// Abbreviation list file for sentence segmentation.
    #[arg(long)]
    abbreviations: Option<PathBuf>,
    /// Skip malformed input lines instead of aborting.
    #[arg(long)]
    continue_on_error: bool,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    /// Target outline bullet count m.
    #[arg(long)]
    bullets: Option<usize>,
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_tokens: Option<usize>,
    #[arg(long)]
    retries: Option<u32>,
    /// Replay transport file; no live endpoint is contacted when set.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Record every exchange into this replay file.
    #[arg(long, conflicts_with = "replay")]
    record: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    outline_template: Option<PathBuf>,
    #[arg(long)]
    allin_template: Option<PathBuf>,
    #[arg(long)]
    segment_template: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AlignArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Reference corpus matched by document id; without it each document
    /// scores against its own text.
    #[arg(long)]
    refs: Option<PathBuf>,
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated subset of r1,r2,rl,bleu1,bleu2,bleu4,dv,pd.
    #[arg(long)]
    metrics: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Fail (exit 4) when any document had to be skipped for a metric.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// JSON file holding one profile object or a list of them.
    #[arg(long)]
    profile: PathBuf,
    /// Replicate each profile with seeds 0..N.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// report.json files produced by `eval`.
    #[arg(long, num_args = 1..)]
    tables: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    labels: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

/// Values a JSON config file may supply; flags always win.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    endpoint: Option<String>,
    model: Option<String>,
    mode: Option<String>,
    bullets: Option<usize>,
    concurrency: Option<usize>,
    temperature: Option<f64>,
    max_tokens: Option<usize>,
    retries: Option<u32>,
    backend: Option<String>,
    epsilon: Option<f64>,
    metrics: Option<String>,
    min_words: Option<usize>,
    max_sentences: Option<usize>,
}

impl FileConfig {
    fn load(path: Option<&PathBuf>) -> Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                serde_json::from_str(&text).map_err(Error::from)
            }
        }
    }
}

/// Entry point used by both `main` and the integration tests.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not usage errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let file_config = match FileConfig::load(cli.config.as_ref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    };
    let outcome = match cli.command {
        Command::Preprocess(args) => cmd_preprocess(args, &file_config),
        Command::Generate(args) => cmd_generate(args, &file_config),
        Command::Align(args) => cmd_align(args, &file_config),
        Command::Eval(args) => cmd_eval(args, &file_config),
        Command::Synth(args) => cmd_synth(args, &file_config),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::MalformedLine { .. } | Error::Json(_) | Error::InvalidPattern { .. } => {
            EXIT_IO
        }
        Error::Transport { .. }
        | Error::OutlineParse { .. }
        | Error::PartialGeneration { .. }
        | Error::ReplayMiss(_) => EXIT_ENDPOINT,
        Error::MetricUndefined(_) | Error::EmptyReference | Error::EmptyOutline | Error::EmptyText => {
            EXIT_METRIC
        }
        _ => EXIT_USAGE,
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Reproducibility artifact: the fully resolved settings, written into the
/// output directory before anything else.
fn dump_resolved_config<T: Serialize>(out_dir: &Path, resolved: &T) -> Result<()> {
    ensure_dir(out_dir)?;
    let path = out_dir.join("resolved_config.json");
    let text = serde_json::to_string_pretty(resolved)?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn out_dir_of(file: &Path) -> PathBuf {
    match file.parent() {
        Some(p) if p.as_os_str().is_empty() => PathBuf::from("."),
        Some(p) => p.to_path_buf(),
        None => PathBuf::from("."),
    }
}

fn parse_backend(
    name: Option<&str>,
    embeddings: Option<&PathBuf>,
) -> Result<SimilarityBackend> {
    match name.unwrap_or("unigram-f1") {
        "unigram-f1" => Ok(SimilarityBackend::UnigramF1),
        "rouge-l-f1" => Ok(SimilarityBackend::RougeLF1),
        "embedding-cosine" => {
            let path = embeddings.ok_or_else(|| {
                Error::InvalidConfig("embedding-cosine backend needs --embeddings".into())
            })?;
            Ok(SimilarityBackend::EmbeddingCosine(EmbeddingTable::load(path)?))
        }
        other => Err(Error::InvalidConfig(format!("unknown backend {other:?}"))),
    }
}

fn cmd_preprocess(args: PreprocessArgs, file_config: &FileConfig) -> Result<i32> {
    let mut config = PreprocessConfig::default();
    config.min_words = args.min_words.or(file_config.min_words).unwrap_or(64);
    config.max_sentences = args.max_sentences.or(file_config.max_sentences).unwrap_or(40);
    if let Some(p) = &args.patterns {
        config.patterns = BoilerplatePatterns::load(p)?;
    }
    if let Some(p) = &args.abbreviations {
        config.abbreviations = AbbreviationList::load(p)?;
    }

    let out_dir = out_dir_of(&args.out);
    dump_resolved_config(
        &out_dir,
        &serde_json::json!({
            "subcommand": "preprocess",
            "in": args.input,
            "out": args.out,
            "min_words": config.min_words,
            "max_sentences": config.max_sentences,
            "patterns": args.patterns,
            "abbreviations": args.abbreviations,
            "continue_on_error": args.continue_on_error,
        }),
    )?;

    let mut documents = Vec::new();
    let mut skips: HashMap<SkipReason, usize> = HashMap::new();
    let mut line_errors = 0usize;
    for record in load_corpus(&args.input)? {
        let record = match record {
            Ok(r) => r,
            Err(e) if args.continue_on_error => {
                eprintln!("warning: {e}");
                line_errors += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        match preprocess(&record, &config) {
            Ok(doc) => documents.push(doc),
            Err(reason) => *skips.entry(reason).or_insert(0) += 1,
        }
    }
    write_jsonl(&args.out, documents.iter())?;
    println!(
        "preprocess: {} retained, {} skipped ({}), {} malformed lines",
        documents.len(),
        skips.values().sum::<usize>(),
        summarize_skips(&skips),
        line_errors
    );
    Ok(EXIT_OK)
}

fn summarize_skips(skips: &HashMap<SkipReason, usize>) -> String {
    let mut parts: Vec<String> = skips.iter().map(|(r, n)| format!("{r}: {n}")).collect();
    parts.sort();
    if parts.is_empty() {
        "none".into()
    } else {
        parts.join(", ")
    }
}

fn read_template(path: Option<&PathBuf>, default: &str) -> Result<String> {
    match path {
        None => Ok(default.to_string()),
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e)),
    }
}

fn cmd_generate(args: GenerateArgs, file_config: &FileConfig) -> Result<i32> {
    let mode: Mode = args
        .mode
        .as_deref()
        .or(file_config.mode.as_deref())
        .unwrap_or("all-in")
        .parse()?;
    let defaults = GenerationConfig::default();
    let config = GenerationConfig {
        endpoint: args
            .endpoint
            .clone()
            .or_else(|| file_config.endpoint.clone())
            .unwrap_or_default(),
        model: args
            .model
            .clone()
            .or_else(|| file_config.model.clone())
            .unwrap_or_else(|| "gpt-3.5-turbo".into()),
        mode,
        outline_bullets: args.bullets.or(file_config.bullets).unwrap_or(3),
        temperature: args
            .temperature
            .or(file_config.temperature)
            .unwrap_or(defaults.temperature),
        max_tokens: args
            .max_tokens
            .or(file_config.max_tokens)
            .unwrap_or(defaults.max_tokens),
        concurrency: args.concurrency.or(file_config.concurrency).unwrap_or(1),
        retries: args.retries.or(file_config.retries).unwrap_or(defaults.retries),
        backoff_ms: defaults.backoff_ms.clone(),
        templates: Templates {
            outline: read_template(args.outline_template.as_ref(), &defaults.templates.outline)?,
            allin: read_template(args.allin_template.as_ref(), &defaults.templates.allin)?,
            segment: read_template(args.segment_template.as_ref(), &defaults.templates.segment)?,
        },
        seed: 0,
    };
    config.validate()?;
    if config.endpoint.is_empty() && args.replay.is_none() {
        return Err(Error::InvalidConfig(
            "generate needs --endpoint or --replay".into(),
        ));
    }

    let out_dir = out_dir_of(&args.out);
    dump_resolved_config(
        &out_dir,
        &serde_json::json!({
            "subcommand": "generate",
            "in": args.input,
            "out": args.out,
            "replay": args.replay,
            "record": args.record,
            "checkpoint": args.checkpoint,
            "config": config,
        }),
    )?;

    let documents = read_documents(&args.input)?;
    let transport: Box<dyn Transport> = match (&args.replay, &args.record) {
        (Some(replay), _) => Box::new(ReplayTransport::load(replay)?),
        (None, Some(record)) => Box::new(RecordingTransport::create(
            HttpTransport::new(&config.endpoint),
            record,
        )?),
        (None, None) => Box::new(HttpTransport::new(&config.endpoint)),
    };
    let checkpoint = match &args.checkpoint {
        Some(p) => Some(Checkpoint::open(p)?),
        None => None,
    };

    let abbreviations = AbbreviationList::default();
    let run = run_generation(
        &documents,
        &config,
        transport.as_ref(),
        &abbreviations,
        checkpoint.as_ref(),
    )?;

    write_jsonl(&args.out, run.documents.iter())?;
    let trace_path = args.out.with_extension("trace.jsonl");
    write_jsonl(&trace_path, run.traces.iter())?;
    println!(
        "generate: {} generated, {} already complete, {} failed",
        run.documents.len(),
        run.skipped_completed,
        run.failures.len()
    );
    if let Some((id, e)) = run.failures.first() {
        eprintln!("error: document {id}: {e}");
        return Ok(EXIT_ENDPOINT);
    }
    Ok(EXIT_OK)
}

/// Wire form of an f64 alignment matrix.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    id: String,
    bullet_texts: Vec<String>,
    sentence_count: usize,
    raw: Vec<Vec<f64>>,
    distributions: Vec<Vec<f64>>,
}

fn cmd_align(args: AlignArgs, file_config: &FileConfig) -> Result<i32> {
    let backend = parse_backend(
        args.backend.as_deref().or(file_config.backend.as_deref()),
        args.embeddings.as_ref(),
    )?;
    let epsilon = args.epsilon.or(file_config.epsilon).unwrap_or(1e-6);
    dump_resolved_config(
        &args.out_dir,
        &serde_json::json!({
            "subcommand": "align",
            "in": args.input,
            "out_dir": args.out_dir,
            "backend": backend.name(),
            "embeddings": args.embeddings,
            "epsilon": epsilon,
        }),
    )?;

    let documents = read_documents(&args.input)?;
    let spec = HeatmapSpec::default();
    for doc in &documents {
        let matrix: AlignmentMatrix<f64> =
            alignment_matrix(&backend, &doc.outline, &doc.text, epsilon)?;
        let svg = render_heatmap(&matrix, &spec)?;
        let svg_path = args.out_dir.join(format!("{}.svg", doc.id));
        std::fs::write(&svg_path, svg).map_err(|e| Error::io(&svg_path, e))?;
        let json = MatrixJson {
            id: doc.id.clone(),
            bullet_texts: matrix.bullet_texts.clone(),
            sentence_count: matrix.sentence_count,
            raw: matrix.raw.clone(),
            distributions: matrix.distributions.clone(),
        };
        let json_path = args.out_dir.join(format!("{}.matrix.json", doc.id));
        let text = serde_json::to_string_pretty(&json)?;
        std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    }
    println!("align: wrote heatmap + matrix for {} documents", documents.len());
    Ok(EXIT_OK)
}

fn parse_metric_list(spec: Option<&str>) -> Result<Vec<Metric>> {
    match spec {
        None => Ok(Metric::ALL.to_vec()),
        Some(s) => s.split(',').map(Metric::parse).collect(),
    }
}

fn cmd_eval(args: EvalArgs, file_config: &FileConfig) -> Result<i32> {
    let backend = parse_backend(
        args.backend.as_deref().or(file_config.backend.as_deref()),
        args.embeddings.as_ref(),
    )?;
    let epsilon = args.epsilon.or(file_config.epsilon).unwrap_or(1e-6);
    let metrics = parse_metric_list(
        args.metrics.as_deref().or(file_config.metrics.as_deref()),
    )?;

    let out_dir = out_dir_of(&args.out);
    dump_resolved_config(
        &out_dir,
        &serde_json::json!({
            "subcommand": "eval",
            "in": args.input,
            "refs": args.refs,
            "backend": backend.name(),
            "epsilon": epsilon,
            "metrics": metrics,
            "out": args.out,
            "csv": args.csv,
            "strict": args.strict,
        }),
    )?;

    let documents = read_documents(&args.input)?;
    let references: Option<HashMap<String, Document>> = match &args.refs {
        None => None,
        Some(p) => Some(
            read_documents(p)?
                .into_iter()
                .map(|d| (d.id.clone(), d))
                .collect(),
        ),
    };
    let report = evaluate_corpus(&documents, references.as_ref(), &backend, epsilon, &metrics);

    let text = serde_json::to_string_pretty(&report)?;
    std::fs::write(&args.out, text).map_err(|e| Error::io(&args.out, e))?;
    if let Some(csv_path) = &args.csv {
        let label = args
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "corpus".into());
        let csv_text = crate::report::render_csv_table(&[&report], &[label])?;
        std::fs::write(csv_path, csv_text).map_err(|e| Error::io(csv_path, e))?;
    }
    println!(
        "eval: {} documents, {} skips",
        report.document_count(),
        report.skips.len()
    );
    if args.strict && !report.skips.is_empty() {
        for skip in &report.skips {
            eprintln!("skip: {} {}: {}", skip.doc_id, skip.metric, skip.reason);
        }
        return Ok(EXIT_METRIC);
    }
    Ok(EXIT_OK)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProfileFile {
    One(SynthProfile),
    Many(Vec<SynthProfile>),
}

fn cmd_synth(args: SynthArgs, file_config: &FileConfig) -> Result<i32> {
    let text = std::fs::read_to_string(&args.profile).map_err(|e| Error::io(&args.profile, e))?;
    let parsed: ProfileFile = serde_json::from_str(&text)?;
    let base_profiles = match parsed {
        ProfileFile::One(p) => vec![p],
        ProfileFile::Many(ps) => ps,
    };
    let epsilon = args.epsilon.or(file_config.epsilon).unwrap_or(1e-6);

    ensure_dir(&args.out)?;
    dump_resolved_config(
        &args.out,
        &serde_json::json!({
            "subcommand": "synth",
            "profile": args.profile,
            "seeds": args.seeds,
            "out": args.out,
            "epsilon": epsilon,
            "profiles": base_profiles,
        }),
    )?;

    let mut profiles = Vec::new();
    for base in &base_profiles {
        for seed in 0..args.seeds.max(1) {
            let mut p = base.clone();
            p.seed = base.seed.wrapping_add(seed);
            profiles.push(p);
        }
    }
    let documents: Vec<Document> = profiles
        .iter()
        .map(synthesize)
        .collect::<Result<Vec<_>>>()?;
    write_jsonl(&args.out.join("documents.jsonl"), documents.iter())?;
    let rows = sweep(&profiles, &SimilarityBackend::UnigramF1, epsilon)?;
    write_sweep_csv(&args.out.join("sweep.csv"), &rows)?;
    println!("synth: {} documents, sweep.csv written", documents.len());
    Ok(EXIT_OK)
}

fn cmd_report(args: ReportArgs) -> Result<i32> {
    if args.tables.len() != args.labels.len() {
        return Err(Error::LabelMismatch {
            reports: args.tables.len(),
            labels: args.labels.len(),
        });
    }
    ensure_dir(&args.out)?;
    dump_resolved_config(
        &args.out,
        &serde_json::json!({
            "subcommand": "report",
            "tables": args.tables,
            "labels": args.labels,
            "out": args.out,
        }),
    )?;
    let mut reports = Vec::new();
    for path in &args.tables {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let report: MetricReport = serde_json::from_str(&text)?;
        reports.push(report);
    }
    let refs: Vec<&MetricReport> = reports.iter().collect();
    write_tables(
        &refs,
        &args.labels,
        &args.out.join("table.md"),
        &args.out.join("table.csv"),
    )?;
    println!("report: table.md and table.csv written");
    Ok(EXIT_OK)
}
