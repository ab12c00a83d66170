//! Command-line entry point.
//!
//! Machine-readable output goes to stdout, human summaries to stderr. With
//! `--json`, stdout is exactly one JSON document, errors included. Exit
//! codes: 0 success, 1 usage or validation error, 2 I/O or backend failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    choice_accuracy, correlation_table, corpus_prevalence, export_projection_inputs,
    format_agreement_matrix, format_table, levenshtein_reports, load_embeddings,
    pair_similarity_stats, read_scores, report, score_report, treatment_deltas, AnalysisError,
    GroupBy,
};
use crate::formats::{all_formats, token_budget, FormatError, FormatOptions, RealRange};
use crate::grammar::{compile_gbnf, GrammarError};
use crate::harness::{
    execute_run, load_benchmark, read_records, BackendKind, BenchmarkKind, HarnessError,
    HttpBackend, RunConfig, RunOptions, RunRecord, ENDPOINT_ENV,
};
use crate::vocab::{
    find_lw_pairs, load_vocab, pair_stats, read_pairs_csv, write_pairs_csv, LwPair, VocabError,
    Vocabulary,
};

/// Upper bound on worker threads.
pub const MAX_JOBS: usize = 16;

#[derive(Debug, Parser)]
#[command(
    name = "gcd-audit",
    version,
    about = "Audit grammar-constrained decoding: grammars, output formats, runs and reports",
    after_help = "Environment:\n  GCD_AUDIT_ENDPOINT  overrides backend.endpoint of a run config\n  GCD_AUDIT_TOKEN     bearer token sent to the completion endpoint\n\nExit codes: 0 ok, 1 usage or validation error, 2 I/O or backend failure."
)]
struct Cli {
    /// Print exactly one JSON document on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads [default: logical CPUs, at most 16].
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check outputs against GBNF grammars and compute token masks.
    #[command(subcommand)]
    Grammar(GrammarCmd),
    /// Emit the output-format grid.
    #[command(subcommand)]
    Formats(FormatsCmd),
    /// Execute or resume a run described by a TOML config.
    Run(RunArgs),
    /// Reports over run records.
    #[command(subcommand)]
    Stats(StatsCmd),
    /// Tokenizer and embedding analyses.
    #[command(subcommand)]
    Tokens(TokensCmd),
}

#[derive(Debug, Subcommand)]
enum GrammarCmd {
    /// Report whether the grammar accepts a complete output.
    Check {
        /// GBNF file.
        grammar: PathBuf,
        /// Candidate output.
        #[arg(long, allow_hyphen_values = true)]
        input: String,
    },
    /// List the tokens the grammar allows after a prefix.
    Mask {
        /// GBNF file.
        grammar: PathBuf,
        /// Tokenizer JSON.
        #[arg(long)]
        vocab: PathBuf,
        /// Text already generated.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        prefix: String,
    },
}

#[derive(Debug, Subcommand)]
enum FormatsCmd {
    /// Write `<family>_<variant>[_space][_newline].gbnf` and a `.json`
    /// value-map sidecar for every format.
    Emit {
        #[arg(long)]
        out_dir: PathBuf,
        /// Largest value of the integer family.
        #[arg(long, default_value_t = 10)]
        integer_max: u32,
        /// Real-family grid.
        #[arg(long, default_value = "hundredths", value_parser = ["hundredths", "tenths"])]
        real_range: String,
        /// Tokenizer JSON; adds exact token budgets to the sidecars.
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Run config (TOML); see docs/run.example.toml.
    #[arg(long)]
    config: PathBuf,
    /// Stop after this many new records, leaving the run resumable.
    #[arg(long, hide = true)]
    stop_after: Option<usize>,
}

#[derive(Debug, Args)]
struct TableOpts {
    /// Run record files (JSONL).
    #[arg(required = true)]
    records: Vec<PathBuf>,
    /// CSV instead of Markdown.
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Subcommand)]
enum StatsCmd {
    /// Spearman, Pearson and MSE per group.
    Correlate {
        #[command(flatten)]
        table: TableOpts,
        /// Comma-separated grouping: model, family, size, benchmark, format,
        /// format_family, variant, treatment.
        #[arg(long, value_delimiter = ',', default_value = "model,benchmark,format")]
        group_by: Vec<GroupBy>,
        /// Per-format-family table of untreated numeric formats instead.
        #[arg(long, conflicts_with = "group_by")]
        by_format: bool,
    },
    /// Correlation change per treatment and model family.
    Deltas {
        #[command(flatten)]
        table: TableOpts,
    },
    /// Agreement between formats for one model.
    Matrix {
        #[command(flatten)]
        table: TableOpts,
        /// Model name; optional when the records hold one model.
        #[arg(long)]
        model: Option<String>,
    },
    /// Multiple-choice accuracy per labelling style.
    Choices {
        #[command(flatten)]
        table: TableOpts,
    },
    /// Edit-distance and ingested-score baselines against benchmark labels.
    Baseline {
        /// `KIND=PATH`, repeatable.
        #[arg(long = "bench", required = true, value_parser = parse_bench)]
        benches: Vec<(BenchmarkKind, PathBuf)>,
        /// `KIND=PATH` of an `item_id,score` CSV, repeatable.
        #[arg(long = "scores", value_parser = parse_bench)]
        scores: Vec<(BenchmarkKind, PathBuf)>,
        /// Method name reported for ingested scores.
        #[arg(long, default_value = "bertscore")]
        score_method: String,
        /// CSV instead of Markdown.
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Debug, Args)]
struct PairSource {
    /// Pairs CSV (`bare_id,lw_id,surface`).
    #[arg(long, required_unless_present = "vocab")]
    pairs: Option<PathBuf>,
    /// Tokenizer JSON to mine pairs from.
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum TokensCmd {
    /// Mine leading-whitespace pairs; CSV `bare_id,lw_id,surface`.
    Pairs {
        #[arg(long)]
        vocab: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Corpus occurrences of paired tokens.
    Prevalence {
        #[arg(long)]
        vocab: PathBuf,
        /// Text corpus; `-` reads stdin.
        #[arg(long)]
        corpus: PathBuf,
        /// Pairs CSV; mined from the vocabulary when absent.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Lines encoded per parallel batch.
        #[arg(long, default_value_t = 4096)]
        batch_lines: usize,
    },
    /// Cosine similarity of pairs against random token pairs.
    Embsim {
        /// Embedding matrix (binary or text).
        #[arg(long)]
        embeddings: PathBuf,
        #[command(flatten)]
        source: PairSource,
        #[arg(long, default_value_t = 10_000)]
        baseline_k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Pair-tagged embedding rows for an external 2-D projection.
    ExportProj {
        #[arg(long)]
        embeddings: PathBuf,
        #[command(flatten)]
        source: PairSource,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        background_k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_bench(s: &str) -> Result<(BenchmarkKind, PathBuf), String> {
    let (kind, path) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KIND=PATH, got `{s}`"))?;
    Ok((kind.parse()?, PathBuf::from(path)))
}

/// A failed command: exit code and message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn invalid(e: impl Display) -> Failure {
    Failure {
        code: 1,
        message: e.to_string(),
    }
}

fn io_failure(e: impl Display) -> Failure {
    Failure {
        code: 2,
        message: e.to_string(),
    }
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| io_failure(format!("{}: {e}", path.display()))
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_io() {
            io_failure(e)
        } else {
            invalid(e)
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match &e {
            AnalysisError::Vocab(v) => vocab_failure(v, &e),
            _ if e.is_io() => io_failure(e),
            _ => invalid(e),
        }
    }
}

fn vocab_failure(v: &VocabError, shown: &dyn Display) -> Failure {
    if matches!(v, VocabError::Io { .. }) {
        io_failure(shown)
    } else {
        invalid(shown)
    }
}

impl From<VocabError> for Failure {
    fn from(e: VocabError) -> Self {
        vocab_failure(&e, &e)
    }
}

impl From<GrammarError> for Failure {
    fn from(e: GrammarError) -> Self {
        invalid(e)
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        invalid(e)
    }
}

/// What a command produced.
struct Output {
    /// Document printed under `--json`.
    json: Value,
    /// Stdout without `--json`.
    text: String,
    /// Stderr summary.
    summary: String,
}

type CmdResult = Result<Output, Failure>;

/// Worker count: the flag, else the config, else logical CPUs; capped.
pub fn effective_jobs(flag: Option<usize>, config: Option<usize>) -> usize {
    flag.or(config)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, MAX_JOBS)
}

pub fn run_from_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

/// Parses `args` (program name first), runs the command, and returns the
/// exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let wants_json = args.iter().skip(1).any(|a| a == "--json");
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let _ = write!(err, "{}", e.render());
            if wants_json {
                let _ = writeln!(out, "{}", json!({"error": e.kind().to_string(), "exit_code": 1}));
            }
            return 1;
        }
    };
    let json_mode = cli.json;
    let jobs = cli.jobs.map(usize::from);
    let result = dispatch(cli.command, jobs);
    match result {
        Ok(o) => {
            if !o.summary.is_empty() {
                let _ = writeln!(err, "{}", o.summary.trim_end());
            }
            if json_mode {
                let _ = writeln!(out, "{}", o.json);
            } else {
                let _ = write!(out, "{}", o.text);
            }
            let _ = out.flush();
            0
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            if json_mode {
                let _ = writeln!(out, "{}", json!({"error": f.message, "exit_code": f.code}));
            }
            f.code
        }
    }
}

fn dispatch(cmd: Command, jobs: Option<usize>) -> CmdResult {
    match cmd {
        Command::Grammar(GrammarCmd::Check { grammar, input }) => grammar_check(&grammar, &input),
        Command::Grammar(GrammarCmd::Mask {
            grammar,
            vocab,
            prefix,
        }) => grammar_mask(&grammar, &vocab, &prefix),
        Command::Formats(FormatsCmd::Emit {
            out_dir,
            integer_max,
            real_range,
            vocab,
        }) => formats_emit(&out_dir, integer_max, &real_range, vocab.as_deref()),
        Command::Run(args) => run_cmd(&args, jobs),
        Command::Stats(cmd) => stats(cmd),
        Command::Tokens(cmd) => tokens(cmd, jobs),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(io_at(path))
}

fn grammar_check(path: &Path, input: &str) -> CmdResult {
    let g = compile_gbnf(&read_text(path)?)?;
    let accepted = g.validate_output(input);
    let word = if accepted { "accepted" } else { "rejected" };
    Ok(Output {
        json: json!({"grammar": path, "input": input, "accepted": accepted}),
        text: format!("{word}\n"),
        summary: String::new(),
    })
}

fn grammar_mask(path: &Path, vocab_path: &Path, prefix: &str) -> CmdResult {
    let g = compile_gbnf(&read_text(path)?)?;
    let vocab = load_vocab(vocab_path)?;
    let state = g.advance_text(&g.initial_state()?, prefix)?;
    if state.is_rejected() {
        return Err(invalid(format!("prefix {prefix:?} is rejected by the grammar")));
    }
    let mask = g.allowed_tokens(&state, &vocab)?;
    let ids: Vec<u32> = mask.allowed_ids().collect();
    let mut text = String::new();
    for &id in &ids {
        text.push_str(&format!("{id}\t{}\n", escape(vocab.token_str(id).unwrap_or(""))));
    }
    let tokens: Vec<Value> = ids
        .iter()
        .map(|&id| json!({"id": id, "text": vocab.token_str(id)}))
        .collect();
    Ok(Output {
        json: json!({
            "prefix": prefix,
            "vocab_size": vocab.len(),
            "count": ids.len(),
            "eos_allowed": mask.eos_allowed(),
            "tokens": tokens,
        }),
        text,
        summary: format!(
            "{} of {} tokens allowed; end of sequence {}",
            ids.len(),
            vocab.len(),
            if mask.eos_allowed() { "allowed" } else { "not allowed" }
        ),
    })
}

fn escape(s: &str) -> String {
    s.escape_debug().to_string()
}

fn formats_emit(out_dir: &Path, integer_max: u32, real_range: &str, vocab: Option<&Path>) -> CmdResult {
    let options = FormatOptions {
        integer_max,
        real_range: if real_range == "tenths" {
            RealRange::Tenths
        } else {
            RealRange::Hundredths
        },
    };
    let specs = all_formats(options)?;
    let vocab = vocab.map(load_vocab).transpose()?;
    std::fs::create_dir_all(out_dir).map_err(io_at(out_dir))?;
    let mut written = Vec::new();
    for spec in &specs {
        let id = spec.id();
        let budget = match &vocab {
            Some(v) => token_budget(spec, v)?,
            None => spec.max_tokens(),
        };
        let gbnf_path = out_dir.join(format!("{id}.gbnf"));
        let json_path = out_dir.join(format!("{id}.json"));
        let values: Vec<Value> = spec
            .value_map()
            .iter()
            .map(|(s, v)| json!({"surface": s, "value": v}))
            .collect();
        let sidecar = json!({
            "format_id": id,
            "family": spec.family,
            "variant": spec.variant,
            "with_newline": spec.treatments.with_newline,
            "with_space": spec.treatments.with_space,
            "prefix": spec.treatments.prefix(),
            "integer_max": spec.options.integer_max,
            "real_range": spec.options.real_range,
            "max_tokens": budget,
            "budget_source": if vocab.is_some() { "vocab" } else { "bytes" },
            "values": values,
        });
        std::fs::write(&gbnf_path, format!("{}\n", spec.gbnf())).map_err(io_at(&gbnf_path))?;
        let body = serde_json::to_string_pretty(&sidecar).map_err(io_failure)?;
        std::fs::write(&json_path, body + "\n").map_err(io_at(&json_path))?;
        written.push(json!({"format_id": id, "grammar": gbnf_path, "sidecar": json_path, "max_tokens": budget}));
    }
    let text: String = written
        .iter()
        .map(|w| format!("{}\n", w["grammar"].as_str().unwrap_or_default()))
        .collect();
    Ok(Output {
        summary: format!("wrote {} formats to {}", written.len(), out_dir.display()),
        json: json!({"out_dir": out_dir, "formats": written}),
        text,
    })
}

fn run_cmd(args: &RunArgs, jobs: Option<usize>) -> CmdResult {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.apply_env();
    let opts = RunOptions {
        jobs: effective_jobs(jobs, cfg.jobs),
        stop_after: args.stop_after,
    };
    let summary = match cfg.backend.kind {
        BackendKind::Mock => execute_run(&cfg, &cfg.backend.mock, &opts)?,
        BackendKind::Http => {
            let endpoint = cfg.backend.endpoint.clone().ok_or_else(|| {
                invalid(format!("http backend needs `endpoint` or {ENDPOINT_ENV}"))
            })?;
            let backend = HttpBackend::new(endpoint, Duration::from_secs(cfg.backend.timeout_secs))
                .map_err(io_failure)?;
            execute_run(&cfg, &backend, &opts)?
        }
    };
    Ok(Output {
        summary: format!(
            "run {}: {} cells, {} resumed, {} written, {} parse failures ({:.2}%){}",
            summary.run_id,
            summary.cells,
            summary.resumed,
            summary.written,
            summary.parse_failures,
            summary.failure_rate * 100.0,
            if summary.torn_line_dropped { "; dropped a torn trailing line" } else { "" }
        ),
        text: format!("{}\n", summary.output.display()),
        json: to_json(&summary)?,
    })
}

fn to_json(v: &impl Serialize) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(invalid)
}

fn load_records(paths: &[PathBuf]) -> Result<Vec<RunRecord>, Failure> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(read_records(p)?);
    }
    if all.is_empty() {
        return Err(invalid("no run records in input"));
    }
    Ok(all)
}

fn table_output(table: report::Table, csv: bool, json: Value, summary: String) -> Output {
    Output {
        json,
        text: if csv { table.to_csv() } else { table.to_markdown() },
        summary,
    }
}

fn stats(cmd: StatsCmd) -> CmdResult {
    match cmd {
        StatsCmd::Correlate {
            table,
            group_by,
            by_format,
        } => {
            let records = load_records(&table.records)?;
            if by_format {
                let cells = format_table(&records)?;
                return Ok(table_output(
                    report::format_rows(&cells),
                    table.csv,
                    to_json(&cells)?,
                    format!("{} records", records.len()),
                ));
            }
            let reports = correlation_table(&records, &group_by)?;
            let json = Value::Array(
                reports
                    .iter()
                    .map(|r| {
                        let key: BTreeMap<&str, &str> =
                            r.key.iter().map(|(g, v)| (g.name(), v.as_str())).collect();
                        json!({
                            "key": key, "rho": r.rho, "r": r.r, "mse": r.mse, "n": r.n,
                            "cells": r.cells, "parse_failures": r.parse_failures,
                            "failure_rate": r.failure_rate,
                        })
                    })
                    .collect(),
            );
            Ok(table_output(
                report::correlation_rows(&reports),
                table.csv,
                json,
                format!("{} records in {} groups", records.len(), reports.len()),
            ))
        }
        StatsCmd::Deltas { table } => {
            let records = load_records(&table.records)?;
            let t = treatment_deltas(&records)?;
            Ok(table_output(
                report::delta_rows(&t),
                table.csv,
                to_json(&t)?,
                format!("{} model families", t.families.len()),
            ))
        }
        StatsCmd::Matrix { table, model } => {
            let records = load_records(&table.records)?;
            let model = match model {
                Some(m) => m,
                None => {
                    let models: std::collections::BTreeSet<&str> =
                        records.iter().map(|r| r.model.as_str()).collect();
                    if models.len() != 1 {
                        return Err(invalid(format!(
                            "records hold {} models; pick one with --model: {}",
                            models.len(),
                            models.into_iter().collect::<Vec<_>>().join(", ")
                        )));
                    }
                    models.into_iter().next().unwrap_or_default().to_string()
                }
            };
            let m = format_agreement_matrix(&records, &model)?;
            Ok(table_output(
                report::matrix_rows(&m),
                table.csv,
                to_json(&m)?,
                format!("{} formats for {}", m.formats.len(), m.model),
            ))
        }
        StatsCmd::Choices { table } => {
            let records = load_records(&table.records)?;
            let t = choice_accuracy(&records)?;
            Ok(table_output(
                report::choice_rows(&t),
                table.csv,
                to_json(&t)?,
                format!("{} multiple-choice benchmarks", t.rows.len()),
            ))
        }
        StatsCmd::Baseline {
            benches,
            scores,
            score_method,
            csv,
        } => {
            let mut reports = Vec::new();
            for (kind, path) in &benches {
                let loaded = load_benchmark(path, *kind, false)?;
                reports.extend(levenshtein_reports(kind.name(), &loaded.items)?);
                for (skind, spath) in scores.iter().filter(|(k, _)| k == kind) {
                    let s = read_scores(spath)?;
                    reports.push(score_report(skind.name(), &score_method, &loaded.items, &s)?);
                }
            }
            Ok(table_output(
                report::baseline_rows(&reports),
                csv,
                to_json(&reports)?,
                format!("{} baselines", reports.len()),
            ))
        }
    }
}

fn load_pairs(source: &PairSource) -> Result<(Vec<LwPair>, Option<Vocabulary>), Failure> {
    match (&source.pairs, &source.vocab) {
        (Some(p), _) => {
            let f = File::open(p).map_err(io_at(p))?;
            Ok((read_pairs_csv(f)?, None))
        }
        (None, Some(v)) => {
            let vocab = load_vocab(v)?;
            Ok((find_lw_pairs(&vocab), Some(vocab)))
        }
        (None, None) => Err(invalid("give --pairs or --vocab")),
    }
}

/// Two-column `metric,value` CSV of a flat JSON object.
fn metrics_csv(v: &Value) -> String {
    let mut t = report::Table::new(["metric", "value"]);
    if let Value::Object(map) = v {
        for (k, val) in map {
            if val.is_array() || val.is_object() {
                continue;
            }
            let s = match val {
                Value::Null => "NA".to_string(),
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            t.push(vec![k.clone(), s]);
        }
    }
    t.to_csv()
}

fn tokens(cmd: TokensCmd, jobs: Option<usize>) -> CmdResult {
    match cmd {
        TokensCmd::Pairs { vocab, out } => {
            let v = load_vocab(&vocab)?;
            let pairs = find_lw_pairs(&v);
            let stats = pair_stats(&v, &pairs);
            let mut buf = Vec::new();
            write_pairs_csv(&v, &pairs, &mut buf)?;
            let csv_text = String::from_utf8(buf).map_err(invalid)?;
            if let Some(out) = &out {
                std::fs::write(out, &csv_text).map_err(io_at(out))?;
            }
            let listed: Vec<Value> = pairs
                .iter()
                .map(|p| {
                    let surface = v.token_bytes(p.bare_id).map(String::from_utf8_lossy);
                    json!({"bare_id": p.bare_id, "lw_id": p.lw_id, "surface": surface})
                })
                .collect();
            Ok(Output {
                summary: format!(
                    "{} pairs over {} tokens; participation rate {:.4}",
                    stats.pairs, stats.vocab_size, stats.participation_rate
                ),
                json: json!({"stats": to_json(&stats)?, "out": out, "pairs": listed}),
                text: if out.is_some() { String::new() } else { csv_text },
            })
        }
        TokensCmd::Prevalence {
            vocab,
            corpus,
            pairs,
            batch_lines,
        } => {
            let v = load_vocab(&vocab)?;
            let pairs = match pairs {
                Some(p) => read_pairs_csv(File::open(&p).map_err(io_at(&p))?)?,
                None => find_lw_pairs(&v),
            };
            let reader: Box<dyn BufRead + Send> = if corpus.as_os_str() == "-" {
                Box::new(BufReader::new(std::io::stdin()))
            } else {
                Box::new(BufReader::new(File::open(&corpus).map_err(io_at(&corpus))?))
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(effective_jobs(jobs, None))
                .build()
                .map_err(io_failure)?;
            let rep = pool.install(|| corpus_prevalence(&v, &pairs, reader, batch_lines))?;
            let doc = to_json(&rep)?;
            Ok(Output {
                summary: format!(
                    "{} lines, {} tokens; LW/bare ratio {}",
                    rep.lines,
                    rep.total_tokens,
                    rep.ratio.map_or_else(|| "undefined".to_string(), |r| format!("{r:.4}"))
                ),
                text: metrics_csv(&doc),
                json: doc,
            })
        }
        TokensCmd::Embsim {
            embeddings,
            source,
            baseline_k,
            seed,
        } => {
            let emb = load_embeddings(&embeddings)?;
            let (pairs, _) = load_pairs(&source)?;
            let ids: Vec<(u32, u32)> = pairs.iter().map(|p| (p.lw_id, p.bare_id)).collect();
            let s = pair_similarity_stats(&emb, &ids, baseline_k, seed)?;
            let doc = to_json(&s)?;
            Ok(Output {
                summary: format!(
                    "pairs {:.4} vs random {:.4}; Cohen's d {}",
                    s.mean,
                    s.baseline_mean,
                    s.cohens_d.map_or_else(|| "undefined".to_string(), |d| format!("{d:.4}"))
                ),
                text: metrics_csv(&doc),
                json: doc,
            })
        }
        TokensCmd::ExportProj {
            embeddings,
            source,
            out,
            background_k,
            seed,
        } => {
            let emb = load_embeddings(&embeddings)?;
            let (pairs, _) = load_pairs(&source)?;
            let file = File::create(&out).map_err(io_at(&out))?;
            let rows = export_projection_inputs(&emb, &pairs, background_k, seed, file)
                .map_err(|e| match e {
                    AnalysisError::Malformed(m) => io_failure(format!("{}: {m}", out.display())),
                    other => Failure::from(other),
                })?;
            Ok(Output {
                summary: format!("wrote {rows} rows to {}", out.display()),
                json: json!({"out": out, "rows": rows, "pairs": pairs.len()}),
                text: format!("{}\n", out.display()),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("gcd-audit").chain(args.iter().copied());
        let code = run_with(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, out, err) = run(&["grammar", "check", "--bogus"]);
        assert_eq!(code, 1);
        assert!(out.is_empty());
        assert!(err.contains("Usage"));
    }

    #[test]
    fn json_error_is_one_document() {
        let (code, out, _) = run(&["--json", "grammar", "check", "/nonexistent.gbnf", "--input", "1"]);
        assert_eq!(code, 2);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["exit_code"], 2);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("GCD_AUDIT_ENDPOINT"));
    }

    #[test]
    fn jobs_default_and_cap() {
        assert_eq!(effective_jobs(Some(64), None), MAX_JOBS);
        assert_eq!(effective_jobs(None, Some(3)), 3);
        assert_eq!(effective_jobs(Some(2), Some(3)), 2);
        let d = effective_jobs(None, None);
        assert!((1..=MAX_JOBS).contains(&d));
    }
}
