//! Benchmark ingestion, prompt rendering, backends and resumable runs.

pub mod backend;
pub mod bench;
pub mod config;
pub mod prompt;
pub mod run;

use std::path::PathBuf;

use thiserror::Error;

pub use backend::{
    Backend, BackendError, CompletionRequest, DecodeParams, HttpBackend, MockBackend, Target,
    WireRequest, TOKEN_ENV,
};
pub use bench::{
    load_benchmark, parse_benchmark, sample_items, BadRow, BenchmarkItem, BenchmarkKind,
    LoadedBenchmark,
};
pub use config::{BackendKind, RunConfig, ENDPOINT_ENV};
pub use prompt::{instruction, render_choice_prompt, render_prompt};
pub use run::{execute_run, read_records, CellKey, RunOptions, RunRecord, RunSummary, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}:{line}: {message}")]
    Malformed {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("cannot sample {requested} items from {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("incompatible format: {0}")]
    Incompatible(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("backend failure at {context}: {source}")]
    Backend {
        context: String,
        #[source]
        source: BackendError,
    },
    #[error("run interrupted after {written} records, {remaining} cells remain")]
    Interrupted { written: usize, remaining: usize },
}

impl HarnessError {
    /// I/O and backend failures, as opposed to invalid input.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            HarnessError::Io { .. } | HarnessError::Backend { .. } | HarnessError::Interrupted { .. }
        )
    }
}
