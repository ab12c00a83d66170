//! Toolkit for auditing how output-format grammars change the behaviour of
//! grammar-constrained decoding.
//!
//! The crate is split along the pipeline:
//!
//! - [`grammar`]: GBNF parsing, compilation and an incremental stack-set
//!   recognizer that computes per-token masks over a vocabulary.
//! - [`vocab`]: tokenizer vocabularies, byte-level BPE, leading-whitespace
//!   twin mining.
//! - [`formats`]: the output-format grammars (family x variant x treatment)
//!   and their surface to value maps.
//! - [`harness`]: benchmark ingestion, prompt rendering, backends and
//!   resumable JSONL runs.
//! - [`analysis`]: correlation tables, treatment deltas, agreement matrices,
//!   multiple-choice accuracy and embedding / corpus statistics.
//! - [`cli`]: the `gcd-audit` command line.

pub mod analysis;
pub mod cli;
pub mod formats;
pub mod grammar;
pub mod harness;
pub mod vocab;
