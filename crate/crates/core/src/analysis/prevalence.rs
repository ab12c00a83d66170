//! Corpus prevalence of leading-whitespace twins.
//!
//! The corpus is read line by line; each line, newline included, is encoded
//! on its own. Batches of lines are encoded in parallel and the per-token
//! histograms summed, so totals do not depend on the worker count.

use std::io::BufRead;

use rayon::prelude::*;
use serde::Serialize;

use super::AnalysisError;
use crate::vocab::{LwPair, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairCount {
    pub bare_id: u32,
    pub lw_id: u32,
    pub bare: u64,
    pub lw: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrevalenceReport {
    pub lines: u64,
    pub bytes: u64,
    pub total_tokens: u64,
    /// Bytes per token.
    pub compression: Option<f64>,
    pub lw_occurrences: u64,
    pub bare_occurrences: u64,
    /// Occurrence-weighted: LW occurrences over bare occurrences.
    pub ratio: Option<f64>,
    /// Mean of per-pair LW/bare ratios over pairs whose bare member occurs.
    pub pair_averaged_ratio: Option<f64>,
    pub pairs_averaged: usize,
    pub per_pair: Vec<PairCount>,
}

struct Histogram {
    counts: Vec<u64>,
    tokens: u64,
}

impl Histogram {
    fn new(n: usize) -> Self {
        Histogram {
            counts: vec![0; n],
            tokens: 0,
        }
    }

    fn merge(mut self, other: Histogram) -> Histogram {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.tokens += other.tokens;
        self
    }
}

pub fn corpus_prevalence(
    vocab: &Vocabulary,
    pairs: &[LwPair],
    mut corpus: impl BufRead,
    batch_lines: usize,
) -> Result<PrevalenceReport, AnalysisError> {
    let batch_lines = batch_lines.max(1);
    let mut total = Histogram::new(vocab.len());
    let (mut lines, mut bytes) = (0u64, 0u64);
    let mut batch: Vec<String> = Vec::with_capacity(batch_lines);
    loop {
        batch.clear();
        while batch.len() < batch_lines {
            let mut line = String::new();
            let n = corpus
                .read_line(&mut line)
                .map_err(|e| AnalysisError::Malformed(format!("corpus line {}: {e}", lines + 1)))?;
            if n == 0 {
                break;
            }
            lines += 1;
            bytes += n as u64;
            batch.push(line);
        }
        if batch.is_empty() {
            break;
        }
        let h = batch
            .par_iter()
            .try_fold(
                || Histogram::new(vocab.len()),
                |mut h, line| -> Result<Histogram, AnalysisError> {
                    let ids = vocab.encode(line).map_err(AnalysisError::Vocab)?;
                    h.tokens += ids.len() as u64;
                    for id in ids {
                        h.counts[id as usize] += 1;
                    }
                    Ok(h)
                },
            )
            .try_reduce(|| Histogram::new(vocab.len()), |a, b| Ok(a.merge(b)))?;
        total = total.merge(h);
    }

    let per_pair: Vec<PairCount> = pairs
        .iter()
        .map(|p| PairCount {
            bare_id: p.bare_id,
            lw_id: p.lw_id,
            bare: total.counts[p.bare_id as usize],
            lw: total.counts[p.lw_id as usize],
        })
        .collect();
    let lw: u64 = per_pair.iter().map(|p| p.lw).sum();
    let bare: u64 = per_pair.iter().map(|p| p.bare).sum();
    let ratios: Vec<f64> = per_pair
        .iter()
        .filter(|p| p.bare > 0)
        .map(|p| p.lw as f64 / p.bare as f64)
        .collect();
    Ok(PrevalenceReport {
        lines,
        bytes,
        total_tokens: total.tokens,
        compression: (total.tokens > 0).then(|| bytes as f64 / total.tokens as f64),
        lw_occurrences: lw,
        bare_occurrences: bare,
        ratio: (bare > 0).then(|| lw as f64 / bare as f64),
        pair_averaged_ratio: (!ratios.is_empty()).then(|| super::stats::mean(&ratios)),
        pairs_averaged: ratios.len(),
        per_pair,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::{find_lw_pairs, SurfaceEncoding};

    fn toy() -> Vocabulary {
        Vocabulary::from_surfaces(
            SurfaceEncoding::Raw,
            vec![("cat".into(), false), (" cat".into(), false), ("\n".into(), false)],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn cat_cat_cat() {
        let v = toy();
        let pairs = find_lw_pairs(&v);
        let r = corpus_prevalence(&v, &pairs, "cat cat cat".as_bytes(), 2).unwrap();
        assert_eq!((r.lw_occurrences, r.bare_occurrences), (2, 1));
        assert_eq!(r.ratio, Some(2.0));
        assert_eq!(r.total_tokens, 3);
    }

    #[test]
    fn batching_does_not_change_counts() {
        let v = toy();
        let pairs = find_lw_pairs(&v);
        let text = "cat cat\ncat\n cat cat cat\n".repeat(7);
        let a = corpus_prevalence(&v, &pairs, text.as_bytes(), 1).unwrap();
        let b = corpus_prevalence(&v, &pairs, text.as_bytes(), 1000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_paired_tokens() {
        let v = toy();
        let r = corpus_prevalence(&v, &[], "cat\n".as_bytes(), 4).unwrap();
        assert_eq!(r.ratio, None);
        assert_eq!(r.pair_averaged_ratio, None);
    }
}
