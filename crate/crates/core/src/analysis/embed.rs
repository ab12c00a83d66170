//! Token-embedding matrices and pair similarity statistics.
//!
//! Binary layout: the 8-byte magic `GCDEMB01`, then `rows` and `cols` as
//! little-endian u64, then `rows * cols` little-endian f32 in row-major
//! order. Anything without the magic is read as text, one row per line,
//! values separated by whitespace or commas.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::stats::{mean, sample_std};
use super::AnalysisError;

pub const EMBEDDING_MAGIC: &[u8; 8] = b"GCDEMB01";

#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Embeddings {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self, AnalysisError> {
        if data.len() != rows * cols {
            return Err(AnalysisError::Malformed(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Embeddings { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, id: u32) -> Option<&[f32]> {
        let i = id as usize;
        (i < self.rows).then(|| &self.data[i * self.cols..(i + 1) * self.cols])
    }

    pub fn scaled(&self, factor: f32) -> Embeddings {
        Embeddings {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AnalysisError> {
        if let Some(rest) = bytes.strip_prefix(EMBEDDING_MAGIC.as_slice()) {
            if rest.len() < 16 {
                return Err(AnalysisError::Malformed("truncated embedding header".into()));
            }
            let rows = u64::from_le_bytes(rest[..8].try_into().unwrap()) as usize;
            let cols = u64::from_le_bytes(rest[8..16].try_into().unwrap()) as usize;
            let body = &rest[16..];
            let want = rows
                .checked_mul(cols)
                .and_then(|n| n.checked_mul(4))
                .ok_or_else(|| AnalysisError::Malformed("embedding size overflows".into()))?;
            if body.len() != want {
                return Err(AnalysisError::Malformed(format!(
                    "expected {want} payload bytes, found {}",
                    body.len()
                )));
            }
            let data = body
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            return Embeddings::new(rows, cols, data);
        }
        let text = std::str::from_utf8(bytes)
            .map_err(|_| AnalysisError::Malformed("embedding file is neither binary nor text".into()))?;
        Self::from_text(text)
    }

    pub fn from_text(text: &str) -> Result<Self, AnalysisError> {
        let mut data = Vec::new();
        let mut rows = 0;
        let mut cols = None;
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let before = data.len();
            for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
                data.push(tok.parse::<f32>().map_err(|_| {
                    AnalysisError::Malformed(format!("line {}: bad value {tok:?}", n + 1))
                })?);
            }
            let width = data.len() - before;
            match cols {
                None => cols = Some(width),
                Some(c) if c != width => {
                    return Err(AnalysisError::Malformed(format!(
                        "line {}: {width} values, expected {c}",
                        n + 1
                    )))
                }
                _ => {}
            }
            rows += 1;
        }
        Embeddings::new(rows, cols.unwrap_or(0), data)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + self.data.len() * 4);
        out.extend_from_slice(EMBEDDING_MAGIC);
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.cols as u64).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<Embeddings, AnalysisError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Embeddings::from_bytes(&bytes)
}

pub fn write_embeddings(emb: &Embeddings, path: impl AsRef<Path>) -> Result<(), AnalysisError> {
    let path = path.as_ref();
    let io = |source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    };
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&emb.to_bytes()))
        .map_err(io)
}

/// Cosine similarity accumulated in f64; `None` for a zero vector.
pub fn cosine(a: &[f32], b: &[f32]) -> Option<f64> {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Difference of means over the pooled sample standard deviation.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Option<f64> {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (s1, s2) = (sample_std(a), sample_std(b));
    let pooled = (((n1 - 1.0) * s1 * s1 + (n2 - 1.0) * s2 * s2) / (n1 + n2 - 2.0)).sqrt();
    (pooled > 0.0).then(|| (mean(a) - mean(b)) / pooled)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSimStats {
    pub n_pairs: usize,
    /// Pairs skipped because a vector was zero.
    pub excluded_pairs: usize,
    pub mean: f64,
    pub std: f64,
    pub baseline_n: usize,
    pub baseline_excluded: usize,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    pub cohens_d: Option<f64>,
}

fn cosines(
    emb: &Embeddings,
    pairs: impl Iterator<Item = (u32, u32)>,
) -> Result<(Vec<f64>, usize), AnalysisError> {
    let mut out = Vec::new();
    let mut excluded = 0;
    for (a, b) in pairs {
        let ra = emb.row(a).ok_or(AnalysisError::IdOutOfRange { id: a, rows: emb.rows })?;
        let rb = emb.row(b).ok_or(AnalysisError::IdOutOfRange { id: b, rows: emb.rows })?;
        match cosine(ra, rb) {
            Some(c) => out.push(c),
            None => excluded += 1,
        }
    }
    Ok((out, excluded))
}

/// Cosine statistics of `pairs` against `baseline_k` seeded random pairs of
/// distinct ids.
pub fn pair_similarity_stats(
    emb: &Embeddings,
    pairs: &[(u32, u32)],
    baseline_k: usize,
    seed: u64,
) -> Result<PairSimStats, AnalysisError> {
    if baseline_k < 2 {
        return Err(AnalysisError::Malformed("baseline_k must be at least 2".into()));
    }
    if emb.rows < 2 {
        return Err(AnalysisError::Malformed("need at least 2 embedding rows".into()));
    }
    let (sims, excluded) = cosines(emb, pairs.iter().copied())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = emb.rows as u32;
    let random: Vec<(u32, u32)> = (0..baseline_k)
        .map(|_| {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n - 1);
            (a, if b >= a { b + 1 } else { b })
        })
        .collect();
    let (base, base_excluded) = cosines(emb, random.into_iter())?;
    Ok(PairSimStats {
        n_pairs: sims.len(),
        excluded_pairs: excluded,
        mean: mean(&sims),
        std: sample_std(&sims),
        baseline_n: base.len(),
        baseline_excluded: base_excluded,
        baseline_mean: mean(&base),
        baseline_std: sample_std(&base),
        cohens_d: cohens_d(&sims, &base),
    })
}
