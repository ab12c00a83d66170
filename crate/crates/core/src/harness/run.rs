//! Run execution and the JSONL record store.
//!
//! One record per line. A cell is `(benchmark, item, format, repeat)`;
//! resuming skips every cell already present for the same run id. After a
//! complete run the file is rewritten in grid order so that identical
//! configurations give identical bytes.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::backend::{Backend, CompletionRequest, DecodeParams, Target};
use super::bench::{load_benchmark, sample_items, BenchmarkItem};
use super::config::RunConfig;
use super::prompt::{render_choice_prompt, render_prompt};
use super::HarnessError;
use crate::formats::{
    build_choice_format, build_format, token_budget, ChoiceFormat, ChoiceStyle, Family, FormatSpec,
    Variant,
};
use crate::grammar::{compile_gbnf, CompiledGrammar};
use crate::vocab::{load_vocab, Vocabulary};

pub const SCHEMA_VERSION: u32 = 1;

/// One generation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: u32,
    pub run_id: String,
    pub model: String,
    pub model_family: String,
    pub model_size: String,
    pub benchmark: String,
    pub item_id: String,
    pub format_id: String,
    /// Scored formats only.
    pub format_family: Option<Family>,
    pub variant: Option<Variant>,
    /// Multiple-choice formats only.
    pub choice_style: Option<ChoiceStyle>,
    pub with_newline: bool,
    pub with_space: bool,
    pub repeat: u32,
    /// SHA-256 of the prompt, hex.
    pub prompt_hash: String,
    pub raw_output: String,
    /// The grammar accepts `raw_output`.
    pub valid: bool,
    /// Native-scale value, or the chosen index for multiple choice. Present
    /// exactly when `valid`.
    pub parsed_value: Option<f64>,
    /// `parsed_value` mapped onto [0, 1].
    pub normalized_value: Option<f64>,
    pub parse_error: Option<String>,
    /// Human label on [0, 1].
    pub human_label: f64,
    pub gold: Option<usize>,
    pub latency_ms: u64,
    /// Unix milliseconds; 0 for offline backends.
    pub timestamp_ms: u64,
}

impl RunRecord {
    pub fn cell_key(&self) -> CellKey {
        CellKey {
            benchmark: self.benchmark.clone(),
            item_id: self.item_id.clone(),
            format_id: self.format_id.clone(),
            repeat: self.repeat,
        }
    }

    pub fn correct(&self) -> Option<bool> {
        Some(self.parsed_value? as usize == self.gold? && self.valid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub benchmark: String,
    pub item_id: String,
    pub format_id: String,
    pub repeat: u32,
}

/// Reads records, tolerating one torn trailing line.
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>, HarnessError> {
    Ok(read_records_detailed(path.as_ref())?.0)
}

/// Records plus the byte length of the well-formed prefix.
fn read_records_detailed(path: &Path) -> Result<(Vec<RunRecord>, u64, bool), HarnessError> {
    let io = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io)?;
    let mut reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut good_len = 0u64;
    let mut line_no = 0usize;
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf).map_err(io)?;
        if n == 0 {
            return Ok((out, good_len, false));
        }
        line_no += 1;
        let complete = buf.last() == Some(&b'\n');
        let parsed = std::str::from_utf8(&buf)
            .ok()
            .and_then(|s| serde_json::from_str::<RunRecord>(s.trim_end()).ok());
        match parsed {
            Some(r) if complete => {
                out.push(r);
                good_len += n as u64;
            }
            _ => {
                let at_end = reader.fill_buf().map_err(io)?.is_empty();
                if at_end {
                    return Ok((out, good_len, true));
                }
                return Err(HarnessError::Malformed {
                    source_name: path.display().to_string(),
                    line: line_no,
                    message: "unreadable record".into(),
                });
            }
        }
    }
}

/// Outcome of [`execute_run`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run_id: String,
    pub output: PathBuf,
    pub cells: usize,
    pub resumed: usize,
    pub written: usize,
    pub parse_failures: usize,
    /// Parse failures over cells.
    pub failure_rate: f64,
    pub torn_line_dropped: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker-pool width.
    pub jobs: usize,
    /// Stop after writing this many new records; simulates an interrupted
    /// run.
    pub stop_after: Option<usize>,
}

enum Fmt {
    Scale(FormatSpec),
    Choice(ChoiceFormat),
}

struct PreparedFormat {
    format: Fmt,
    grammar: CompiledGrammar,
    n_predict: u32,
}

impl PreparedFormat {
    fn target(&self) -> Target<'_> {
        match &self.format {
            Fmt::Scale(s) => Target::Scale(s),
            Fmt::Choice(c) => Target::Choice(c),
        }
    }
}

struct Cell {
    order: usize,
    bench: usize,
    item: usize,
    format: usize,
    repeat: u32,
}

struct Plan {
    benchmarks: Vec<(String, Vec<BenchmarkItem>)>,
    formats: Vec<PreparedFormat>,
    /// Per benchmark, the indices of the formats it is crossed with.
    cells: Vec<Cell>,
    keys: Vec<CellKey>,
}

fn prepare(
    spec_format: Fmt,
    vocab: Option<&Vocabulary>,
    max_tokens: Option<u32>,
) -> Result<PreparedFormat, HarnessError> {
    let (gbnf, budget) = match &spec_format {
        Fmt::Scale(s) => {
            let budget = match vocab {
                Some(v) => token_budget(s, v).map_err(|e| HarnessError::Config(e.to_string()))?,
                None => s.max_tokens(),
            };
            (s.gbnf().to_string(), budget)
        }
        Fmt::Choice(c) => {
            let prefix = c.treatments.prefix();
            let budget = match vocab {
                Some(v) => c
                    .surfaces()
                    .iter()
                    .map(|s| {
                        v.min_token_count(&format!("{}{s}", prefix.trim_start_matches('\n')))
                            .map(|n| n + usize::from(c.treatments.with_newline))
                            .ok_or_else(|| HarnessError::Config(format!("cannot spell {s:?}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?
                    .into_iter()
                    .max()
                    .unwrap_or(1),
                None => c.surfaces().iter().map(|s| s.len() + prefix.len()).max().unwrap_or(1),
            };
            (c.gbnf().to_string(), budget)
        }
    };
    let n_predict = match max_tokens {
        Some(m) if (m as usize) < budget => {
            let id = match &spec_format {
                Fmt::Scale(s) => s.id(),
                Fmt::Choice(c) => c.id(),
            };
            return Err(HarnessError::Config(format!(
                "max_tokens {m} is below the {budget}-token budget of {id}"
            )));
        }
        Some(m) => m,
        None => budget as u32,
    };
    let grammar = compile_gbnf(&gbnf).map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(PreparedFormat {
        format: spec_format,
        grammar,
        n_predict,
    })
}

fn plan(cfg: &RunConfig) -> Result<Plan, HarnessError> {
    let vocab = match &cfg.backend.vocab {
        Some(p) => Some(load_vocab(p).map_err(|e| HarnessError::Config(e.to_string()))?),
        None => None,
    };
    let treatments = cfg.grid.parsed_treatments()?;
    let options = cfg.grid.options();

    let mut benchmarks = Vec::new();
    for src in &cfg.benchmarks {
        let loaded = load_benchmark(&src.path, src.kind, cfg.skip_bad)?;
        let items = match cfg.sample_size {
            Some(n) => sample_items(&loaded.items, n, cfg.seed)?,
            None => loaded.items,
        };
        benchmarks.push((src.name(), items));
    }

    let mut formats: Vec<PreparedFormat> = Vec::new();
    let mut scale_ids = Vec::new();
    for &family in &cfg.grid.families {
        for &variant in &cfg.grid.variants {
            for &t in &treatments {
                let spec = build_format(family, variant, t, options)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                scale_ids.push(formats.len());
                formats.push(prepare(Fmt::Scale(spec), vocab.as_ref(), cfg.backend.max_tokens)?);
            }
        }
    }
    // Choice formats depend on arity; built lazily per distinct arity.
    let mut choice_ids: HashMap<usize, Vec<usize>> = HashMap::new();

    let mut cells = Vec::new();
    let mut keys = Vec::new();
    for (b, (name, items)) in benchmarks.iter().enumerate() {
        for (i, item) in items.iter().enumerate() {
            let fids: Vec<usize> = if item.kind.is_multiple_choice() {
                let n = item.choices.len();
                match choice_ids.entry(n) {
                    Entry::Occupied(e) => e.get().clone(),
                    Entry::Vacant(e) => {
                        let mut ids = Vec::new();
                        for &style in &cfg.grid.choice_styles {
                            for &t in &treatments {
                                let c = build_choice_format(style, t, n)
                                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                                ids.push(formats.len());
                                formats.push(prepare(Fmt::Choice(c), vocab.as_ref(), cfg.backend.max_tokens)?);
                            }
                        }
                        e.insert(ids).clone()
                    }
                }
            } else {
                scale_ids.clone()
            };
            for f in fids {
                for repeat in 0..cfg.repeats {
                    keys.push(CellKey {
                        benchmark: name.clone(),
                        item_id: item.id.clone(),
                        format_id: formats[f].target().id(),
                        repeat,
                    });
                    cells.push(Cell {
                        order: cells.len(),
                        bench: b,
                        item: i,
                        format: f,
                        repeat,
                    });
                }
            }
        }
    }
    Ok(Plan {
        benchmarks,
        formats,
        cells,
        keys,
    })
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn run_cell(
    cfg: &RunConfig,
    plan: &Plan,
    cell: &Cell,
    backend: &dyn Backend,
) -> Result<RunRecord, HarnessError> {
    let (bench_name, items) = &plan.benchmarks[cell.bench];
    let item = &items[cell.item];
    let pf = &plan.formats[cell.format];
    let body = match &pf.format {
        Fmt::Scale(s) => render_prompt(item, s)?,
        Fmt::Choice(c) => render_choice_prompt(item, c)?,
    };
    let prompt = format!("{}{}{}", cfg.backend.prompt_prefix, body, cfg.backend.prompt_suffix);
    let params = DecodeParams {
        temperature: cfg.backend.temperature,
        top_p: cfg.backend.top_p,
        n_predict: pf.n_predict,
    };
    let target = pf.target();
    let req = CompletionRequest {
        item,
        target,
        prompt: &prompt,
        grammar: target.gbnf(),
        params: &params,
        repeat: cell.repeat,
    };
    let started = Instant::now();
    let raw = backend.complete(&req).map_err(|source| HarnessError::Backend {
        context: format!("{bench_name}/{}/{}", item.id, target.id()),
        source,
    })?;
    let live = backend.is_live();
    let latency_ms = if live { started.elapsed().as_millis() as u64 } else { 0 };

    let valid = pf.grammar.validate_output(&raw);
    let (parsed, normalized, parse_error) = if !valid {
        (None, None, Some("grammar rejected output".to_string()))
    } else {
        match &pf.format {
            Fmt::Scale(s) => match s.value_of(&raw) {
                Ok(v) => {
                    let (lo, hi) = s.value_range();
                    (Some(v), Some((v - lo) / (hi - lo)), None)
                }
                Err(e) => (None, None, Some(e.to_string())),
            },
            Fmt::Choice(c) => match c.choice_index(&raw) {
                Ok(k) => (
                    Some(k as f64),
                    Some(k as f64 / (c.arity() - 1) as f64),
                    None,
                ),
                Err(e) => (None, None, Some(e.to_string())),
            },
        }
    };
    let (family, variant, style, t) = match &pf.format {
        Fmt::Scale(s) => (Some(s.family), Some(s.variant), None, s.treatments),
        Fmt::Choice(c) => (None, None, Some(c.style), c.treatments),
    };
    Ok(RunRecord {
        schema: SCHEMA_VERSION,
        run_id: cfg.run_id.clone(),
        model: cfg.model.name.clone(),
        model_family: cfg.model.family.clone(),
        model_size: cfg.model.size.clone(),
        benchmark: bench_name.clone(),
        item_id: item.id.clone(),
        format_id: target.id(),
        format_family: family,
        variant,
        choice_style: style,
        with_newline: t.with_newline,
        with_space: t.with_space,
        repeat: cell.repeat,
        prompt_hash: hex::encode(Sha256::digest(prompt.as_bytes())),
        raw_output: raw,
        valid: parsed.is_some(),
        parsed_value: parsed,
        normalized_value: normalized,
        parse_error,
        human_label: item.label,
        gold: item.gold,
        latency_ms,
        timestamp_ms: if live { now_ms() } else { 0 },
    })
}

fn line_of(r: &RunRecord) -> String {
    let mut s = serde_json::to_string(r).expect("record serialises");
    s.push('\n');
    s
}

/// Runs every pending cell of `cfg` against `backend`, appending to the
/// configured output file.
pub fn execute_run(
    cfg: &RunConfig,
    backend: &dyn Backend,
    opts: &RunOptions,
) -> Result<RunSummary, HarnessError> {
    let plan = plan(cfg)?;
    let out_path = &cfg.output;
    let io = |source| HarnessError::Io {
        path: out_path.clone(),
        source,
    };

    let mut done: HashSet<CellKey> = HashSet::new();
    let mut torn = false;
    if out_path.exists() {
        let (existing, good_len, was_torn) = read_records_detailed(out_path)?;
        torn = was_torn;
        if torn {
            let f = OpenOptions::new().write(true).open(out_path).map_err(io)?;
            f.set_len(good_len).map_err(io)?;
        }
        for r in existing {
            if r.run_id != cfg.run_id {
                return Err(HarnessError::Config(format!(
                    "{} holds records of run {:?}, not {:?}",
                    out_path.display(),
                    r.run_id,
                    cfg.run_id
                )));
            }
            done.insert(r.cell_key());
        }
    } else if let Some(dir) = out_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let resumed = plan.keys.iter().filter(|k| done.contains(k)).count();
    let pending: Vec<&Cell> = plan
        .cells
        .iter()
        .filter(|c| !done.contains(&plan.keys[c.order]))
        .collect();

    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(out_path)
        .map_err(io)?;
    let mut writer = BufWriter::new(file);

    let jobs = opts.jobs.max(1).min(pending.len().max(1));
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::sync_channel::<Result<RunRecord, HarnessError>>(jobs * 4);
    let mut written = 0usize;
    let mut first_err: Option<HarnessError> = None;

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            let tx = tx.clone();
            let (next, stop, pending, plan) = (&next, &stop, &pending, &plan);
            scope.spawn(move || loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = pending.get(i) else { break };
                let r = run_cell(cfg, plan, cell, backend);
                if tx.send(r).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for r in rx {
            match r {
                Ok(rec) if first_err.is_none() => {
                    if opts.stop_after.is_some_and(|n| written >= n) {
                        stop.store(true, Ordering::Relaxed);
                        continue;
                    }
                    let res = writer
                        .write_all(line_of(&rec).as_bytes())
                        .and_then(|_| writer.flush());
                    match res {
                        Ok(()) => written += 1,
                        Err(e) => {
                            first_err = Some(io(e));
                            stop.store(true, Ordering::Relaxed);
                        }
                    }
                }
                Ok(_) => {}
                Err(e) => {
                    if first_err.is_none() {
                        first_err = Some(e);
                    }
                    stop.store(true, Ordering::Relaxed);
                }
            }
        }
    });
    writer.flush().map_err(io)?;
    drop(writer);
    if let Some(e) = first_err {
        return Err(e);
    }
    if written + resumed < plan.cells.len() {
        return Err(HarnessError::Interrupted {
            written,
            remaining: plan.cells.len() - resumed - written,
        });
    }

    let records = canonicalise(out_path, &plan.keys)?;
    let parse_failures = records.iter().filter(|r| !r.valid).count();
    Ok(RunSummary {
        run_id: cfg.run_id.clone(),
        output: out_path.clone(),
        cells: plan.cells.len(),
        resumed,
        written,
        parse_failures,
        failure_rate: if records.is_empty() {
            0.0
        } else {
            parse_failures as f64 / records.len() as f64
        },
        torn_line_dropped: torn,
    })
}

/// Rewrites the output in grid order via a temporary file and rename.
fn canonicalise(path: &Path, order: &[CellKey]) -> Result<Vec<RunRecord>, HarnessError> {
    let mut records = read_records(path)?;
    let rank: HashMap<&CellKey, usize> = order.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut seen = HashSet::new();
    for r in &records {
        let key = r.cell_key();
        if !seen.insert(key.clone()) {
            return Err(HarnessError::Config(format!(
                "duplicate cell {}/{}/{}/{} in {}",
                key.benchmark,
                key.item_id,
                key.format_id,
                key.repeat,
                path.display()
            )));
        }
    }
    records.sort_by_key(|r| rank.get(&r.cell_key()).copied().unwrap_or(usize::MAX));
    let tmp = path.with_extension("jsonl.tmp");
    let io = |source| HarnessError::Io {
        path: tmp.clone(),
        source,
    };
    {
        let mut w = BufWriter::new(File::create(&tmp).map_err(io)?);
        for r in &records {
            w.write_all(line_of(r).as_bytes()).map_err(io)?;
        }
        w.into_inner()
            .map_err(|e| io(e.into_error()))?
            .sync_all()
            .map_err(io)?;
    }
    std::fs::rename(&tmp, path).map_err(io)?;
    Ok(records)
}
