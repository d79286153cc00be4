// Copyright 2026 The GFQ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! `gfq` command-line tool.
//!
//! Exit codes: 0 success (including a no-gap result), 2 usage or input
//! error, 3 backend failure, 4 malformed data.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use gfq_core::backends::{BackendError, BackendSuite, RetryPolicy};
use gfq_core::corpus::{self, EntailmentPair, SnliRecord};
use gfq_core::evaluation::{self, ModelId, PairingUnit, RatingTask, Sidedness};
use gfq_core::generation::GenerationError;
use gfq_core::pipeline::{self, select_output, BackendSelection, Mode, PipelineConfig, PipelineError, Status};
use gfq_core::text::{TextRole, TokenizedText};

const NO_GAP: &str = "NO-GAP";

#[derive(Parser)]
#[command(name = "gfq", version, about = "Gap-focused follow-up question generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline on one source/student pair.
    Generate(GenerateArgs),
    /// Run the pipeline over every pair of a JSONL corpus file.
    Batch(BatchArgs),
    /// Load an SNLI-layout file and keep one-directional entailment pairs.
    Ingest(IngestArgs),
    /// Turn batch output into a rating task sheet.
    ExportRatings(ExportArgs),
    /// Aggregate a rating sheet and optionally run a paired test.
    Score(ScoreArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Oracle,
    Remote,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "oracle")]
    backends: BackendKind,
    #[arg(long, env = "GFQ_REMOTE_URL")]
    remote_url: Option<String>,
    /// Per-request timeout for the remote backend.
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
}

impl BackendArgs {
    fn selection(&self) -> Result<BackendSelection, Failure> {
        match self.backends {
            BackendKind::Oracle => Ok(BackendSelection::Oracle),
            BackendKind::Remote => match &self.remote_url {
                Some(url) if !url.trim().is_empty() => Ok(BackendSelection::Remote { url: url.clone() }),
                _ => Err(Failure::usage("--backends remote needs --remote-url or GFQ_REMOTE_URL")),
            },
        }
    }

    fn suite(&self, selection: &BackendSelection) -> Result<BackendSuite, Failure> {
        selection
            .build(Duration::from_millis(self.timeout_ms), RetryPolicy::default())
            .map_err(|e| Failure::backend(format!("starting the remote client: {e}")))
    }
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, value_parser = parse_mode, default_value = "step3")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Round-trip F1 threshold.
    #[arg(long, default_value_t = gfq_core::generation::DEFAULT_THETA)]
    theta: f64,
    #[command(flatten)]
    backend: BackendArgs,
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig, Failure> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Failure::usage(format!(
                "--theta must lie in [0, 1], got {}",
                self.theta
            )));
        }
        Ok(PipelineConfig {
            mode: self.mode,
            seed: self.seed,
            theta: self.theta,
            max_beam_rank: None,
            backends: self.backend.selection()?,
        })
    }
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

#[derive(Args)]
struct GenerateArgs {
    /// Source text, or @FILE to read it from a file.
    #[arg(long)]
    source: String,
    /// Student text, or @FILE. Not used with --interactive.
    #[arg(long, required_unless_present = "interactive")]
    student: Option<String>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Write the full result document here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Read student texts from standard input, one per line.
    #[arg(long, conflicts_with = "out")]
    interactive: bool,
}

#[derive(Args)]
struct BatchArgs {
    /// JSONL corpus: one SNLI-layout record per line.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    snli: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Args)]
struct ExportArgs {
    /// Batch output file.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Shuffle task rows with this seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    ratings: PathBuf,
    #[arg(long, num_args = 2, value_names = ["A", "B"], value_parser = parse_model)]
    wilcoxon: Option<Vec<ModelId>>,
    /// Test whether A scores higher than B instead of a two-sided test.
    #[arg(long, requires = "wilcoxon")]
    one_sided: bool,
    /// Pair individual ratings instead of per-question means.
    #[arg(long, requires = "wilcoxon")]
    per_rating: bool,
    /// Also write the table as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_model(s: &str) -> Result<ModelId, String> {
    s.parse()
}

/// A message with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn backend(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Failure {
            code: 4,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        Failure::usage(format!("{}: {e}", path.display()))
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match (&e, e.backend()) {
            (_, Some(BackendError::Remote(_))) => 3,
            (_, Some(BackendError::Input { .. })) => 4,
            (PipelineError::Generation(GenerationError::EmptySource), _) | (PipelineError::InvalidTheta(_), _) => 2,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Batch(args) => cmd_batch(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::ExportRatings(args) => cmd_export_ratings(args),
        Command::Score(args) => cmd_score(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gfq: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn text_arg(value: &str, role: TextRole) -> Result<TokenizedText, Failure> {
    let raw = match value.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).map_err(|e| Failure::io(Path::new(path), e))?,
        None => value.to_string(),
    };
    Ok(TokenizedText::new(raw.trim_end_matches(['\n', '\r']), role))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn selected_line(result: &pipeline::PipelineResult) -> &str {
    match &result.selected {
        Some(q) if result.status == Status::Ok => &q.question.raw,
        _ => NO_GAP,
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Failure> {
    let config = args.pipeline.config()?;
    let suite = args.pipeline.backend.suite(&config.backends)?;
    let source = text_arg(&args.source, TextRole::Source)?;
    if args.interactive {
        return interactive(&source, &config, &suite);
    }
    let student = text_arg(args.student.as_deref().unwrap_or_default(), TextRole::Student)?;
    let result = pipeline::run(&source, &student, &config, &suite)?;
    if let Some(out) = &args.out {
        let mut doc = result.to_json();
        doc.push('\n');
        write_file(out, doc.as_bytes())?;
    }
    println!("{}", selected_line(&result));
    Ok(())
}

/// Each line is an independent run against the same source.
fn interactive(source: &TokenizedText, config: &PipelineConfig, suite: &BackendSuite) -> Result<(), Failure> {
    let stdin = io::stdin();
    let mut stdout = io::stdout();
    loop {
        eprint!("student> ");
        let mut line = String::new();
        match stdin.lock().read_line(&mut line) {
            Ok(0) => return Ok(()),
            Ok(_) => {}
            Err(e) => return Err(Failure::usage(format!("reading standard input: {e}"))),
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let student = TokenizedText::new(line, TextRole::Student);
        match pipeline::run(source, &student, config, suite) {
            Ok(result) => {
                let _ = writeln!(stdout, "{}", selected_line(&result));
            }
            Err(e) => eprintln!("gfq: {e}"),
        }
    }
}

/// One input line of a batch corpus. `human_question` is carried through to
/// rating export when present.
#[derive(Deserialize)]
struct BatchInput {
    #[serde(flatten)]
    record: SnliRecord,
    #[serde(default)]
    human_question: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BatchStatus {
    Ok,
    NoGap,
    Failed,
}

#[derive(Debug, Serialize, Deserialize)]
struct BatchRecord {
    line: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pair_id: Option<String>,
    status: BatchStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    student_text: Option<String>,
    /// Output of the requested `--mode`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    selected: Option<String>,
    /// Output of every mode, from the same run.
    #[serde(default)]
    selections: BTreeMap<Mode, Option<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    human_question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl BatchRecord {
    fn failed(line: usize, pair_id: Option<String>, error: String) -> Self {
        BatchRecord {
            line,
            pair_id,
            status: BatchStatus::Failed,
            source_text: None,
            student_text: None,
            selected: None,
            selections: BTreeMap::new(),
            human_question: None,
            error: Some(error),
        }
    }
}

fn run_batch_line(line_no: usize, line: &str, config: &PipelineConfig, suite: &BackendSuite) -> Option<BatchRecord> {
    let input: BatchInput = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return Some(BatchRecord::failed(line_no, None, e.to_string())),
    };
    let rec = input.record;
    if rec.kept == Some(false) {
        return None;
    }
    let source = TokenizedText::new(rec.sentence1.as_str(), TextRole::Source);
    let student = TokenizedText::new(rec.sentence2.as_str(), TextRole::Student);
    let result = match pipeline::run(&source, &student, config, suite) {
        Ok(r) => r,
        Err(e) => return Some(BatchRecord::failed(line_no, Some(rec.pair_id), e.to_string())),
    };
    let selections = Mode::ALL
        .into_iter()
        .map(|mode| {
            let cfg = PipelineConfig { mode, ..config.clone() };
            (mode, select_output(&result, &cfg).map(|q| q.question.raw))
        })
        .collect::<BTreeMap<_, _>>();
    Some(BatchRecord {
        line: line_no,
        pair_id: Some(rec.pair_id),
        status: match result.status {
            Status::Ok => BatchStatus::Ok,
            Status::NoGap => BatchStatus::NoGap,
        },
        source_text: Some(rec.sentence1),
        student_text: Some(rec.sentence2),
        selected: selections[&config.mode].clone(),
        selections,
        human_question: input.human_question,
        error: None,
    })
}

fn cmd_batch(args: BatchArgs) -> Result<(), Failure> {
    let config = args.pipeline.config()?;
    let suite = args.pipeline.backend.suite(&config.backends)?;
    let body = fs::read_to_string(&args.pairs).map_err(|e| Failure::io(&args.pairs, e))?;
    let lines: Vec<(usize, &str)> = body
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    // Collecting an indexed parallel iterator keeps input order.
    let records: Vec<BatchRecord> = lines
        .par_iter()
        .filter_map(|&(n, l)| run_batch_line(n, l, &config, &suite))
        .collect();
    let mut out = Vec::new();
    for r in &records {
        serde_json::to_writer(&mut out, r).expect("batch records serialize");
        out.push(b'\n');
    }
    write_file(&args.out, &out)?;
    let failures = records
        .iter()
        .filter(|r| matches!(r.status, BatchStatus::Failed))
        .count();
    let no_gap = records
        .iter()
        .filter(|r| matches!(r.status, BatchStatus::NoGap))
        .count();
    println!("{} pairs, {} no-gap, {} failures", records.len(), no_gap, failures);
    for r in records.iter().filter(|r| r.error.is_some()) {
        eprintln!("line {}: {}", r.line, r.error.as_deref().unwrap_or_default());
    }
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<(), Failure> {
    let load = corpus::load_pairs(&args.snli).map_err(|e| Failure::io(&args.snli, e))?;
    if let Some(first) = load.errors.first() {
        return Err(Failure::data(format!(
            "{}: {} malformed line(s); line {}: {}",
            args.snli.display(),
            load.errors.len(),
            first.line,
            first.message
        )));
    }
    let selection = args.backend.selection()?;
    let suite = args.backend.suite(&selection)?;
    let (skipped_dash, skipped_dropped) = (load.skipped_no_consensus, load.skipped_not_kept);
    let report = corpus::ingest(load, &suite).map_err(|e| {
        let code = match e.source {
            BackendError::Remote(_) => 3,
            BackendError::Input { .. } => 4,
        };
        Failure {
            code,
            message: format!("bidirectional entailment check: {e}"),
        }
    })?;
    let file = File::create(&args.out).map_err(|e| Failure::io(&args.out, e))?;
    corpus::write_records(BufWriter::new(file), &report.records).map_err(|e| Failure::io(&args.out, e))?;
    println!(
        "{} loaded, {} kept ({} without consensus, {} previously dropped)",
        report.records.len(),
        report.kept.len(),
        skipped_dash,
        skipped_dropped
    );
    Ok(())
}

fn cmd_export_ratings(args: ExportArgs) -> Result<(), Failure> {
    let file = File::open(&args.pairs).map_err(|e| Failure::io(&args.pairs, e))?;
    let mut tasks = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Failure::io(&args.pairs, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: BatchRecord = serde_json::from_str(&line)
            .map_err(|e| Failure::data(format!("{} line {}: {e}", args.pairs.display(), i + 1)))?;
        let (Some(id), Some(src), Some(stu)) = (&rec.pair_id, &rec.source_text, &rec.student_text) else {
            continue;
        };
        // Label is irrelevant for export.
        let pair = EntailmentPair::new(id, src, stu, gfq_core::backends::NliLabel::Entailment);
        for (mode, q) in &rec.selections {
            if let Some(q) = q {
                tasks.push(RatingTask::new(&pair, ModelId::from(*mode), q));
            }
        }
        if let Some(q) = rec.human_question.as_deref().filter(|q| !q.trim().is_empty()) {
            tasks.push(RatingTask::new(&pair, ModelId::Human, q));
        }
    }
    let n = evaluation::export_rating_tasks(&tasks, &args.out, args.seed).map_err(|e| match e {
        evaluation::EvalError::Io(e) => Failure::io(&args.out, e),
        other => Failure::data(other.to_string()),
    })?;
    println!("{n} rating tasks");
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<(), Failure> {
    let records = evaluation::import_ratings(&args.ratings).map_err(|e| match e {
        evaluation::EvalError::Io(e) => Failure::io(&args.ratings, e),
        other => Failure::data(format!("{}: {other}", args.ratings.display())),
    })?;
    let mut table = evaluation::aggregate_scores(&records);
    if let Some(pair) = &args.wilcoxon {
        let side = if args.one_sided {
            Sidedness::Greater
        } else {
            Sidedness::TwoSided
        };
        let unit = if args.per_rating {
            PairingUnit::Ratings
        } else {
            PairingUnit::QuestionMeans
        };
        let test = evaluation::paired_test(&records, pair[0], pair[1], unit, side)
            .map_err(|e| Failure::data(format!("wilcoxon {} vs {}: {e}", pair[0], pair[1])))?;
        table.tests.push(test);
    }
    print!("{}", table.render());
    if let Some(out) = &args.out {
        let mut doc = serde_json::to_string_pretty(&table).expect("score table serializes");
        doc.push('\n');
        write_file(out, doc.as_bytes())?;
    }
    Ok(())
}
