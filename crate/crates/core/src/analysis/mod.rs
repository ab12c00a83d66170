//! Statistics over run records and tokenizer artefacts.

use std::path::PathBuf;

use thiserror::Error;

pub mod baseline;
pub mod choices;
pub mod correlate;
pub mod deltas;
pub mod embed;
pub mod export;
pub mod levenshtein;
pub mod matrix;
pub mod prevalence;
pub mod report;
pub mod stats;

pub use baseline::{baseline_report, levenshtein_reports, read_scores, score_report, BaselineReport};
pub use choices::{choice_accuracy, percent_change, ChoiceCell, ChoiceRow, ChoiceTable, Column};
pub use correlate::{
    correlation_table, format_table, treatment_label, CorrelationReport, FormatTableCell, GroupBy,
};
pub use deltas::{
    cell_rhos, deltas_from_cells, treatment_deltas, CellRho, Condition, DeltaRow, DeltaTable,
};
pub use embed::{
    cohens_d, cosine, load_embeddings, pair_similarity_stats, write_embeddings, Embeddings,
    PairSimStats,
};
pub use export::export_projection_inputs;
pub use levenshtein::{levenshtein, levenshtein_baseline, levenshtein_similarity, BaselinePrediction};
pub use matrix::{format_agreement_matrix, AgreementMatrix};
pub use prevalence::{corpus_prevalence, PairCount, PrevalenceReport};
pub use report::Table;
pub use stats::StatsError;

use crate::vocab::VocabError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("nothing to analyse: {0}")]
    Empty(String),
    #[error("missing comparison arm: {0}")]
    MissingArm(String),
    #[error("insufficient overlap: {0}")]
    InsufficientOverlap(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("token id {id} outside embedding matrix of {rows} rows")]
    IdOutOfRange { id: u32, rows: usize },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl AnalysisError {
    pub fn is_io(&self) -> bool {
        matches!(self, AnalysisError::Io { .. })
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::formats::{Family, Variant};
    use crate::harness::{RunRecord, SCHEMA_VERSION};

    /// An untreated numeric scored record.
    pub fn record(
        model: &str,
        benchmark: &str,
        item_id: &str,
        family: Family,
        normalized: Option<f64>,
        label: f64,
    ) -> RunRecord {
        RunRecord {
            schema: SCHEMA_VERSION,
            run_id: "t".into(),
            model: model.into(),
            model_family: model.into(),
            model_size: "small".into(),
            benchmark: benchmark.into(),
            item_id: item_id.into(),
            format_id: format!("{}_numeric", family.name()),
            format_family: Some(family),
            variant: Some(Variant::Numeric),
            choice_style: None,
            with_newline: false,
            with_space: false,
            repeat: 0,
            prompt_hash: String::new(),
            raw_output: normalized.map_or_else(String::new, |v| v.to_string()),
            valid: normalized.is_some(),
            parsed_value: normalized,
            normalized_value: normalized,
            parse_error: normalized.is_none().then(|| "rejected".to_string()),
            human_label: label,
            gold: None,
            latency_ms: 0,
            timestamp_ms: 0,
        }
    }
}
