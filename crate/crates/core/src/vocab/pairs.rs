//! Leading-whitespace (LW) twins: `" culture"` and `"culture"` as separate
//! vocabulary entries.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{VocabError, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LwPair {
    /// Token whose text is a space followed by the bare text.
    pub lw_id: u32,
    pub bare_id: u32,
}

/// Canonical regular tokens that do not already begin with whitespace.
fn bare_candidates(vocab: &Vocabulary) -> impl Iterator<Item = (u32, &[u8])> + '_ {
    (0..vocab.len() as u32).filter_map(move |id| {
        if vocab.is_special(id) {
            return None;
        }
        let bytes = vocab.token_bytes(id)?;
        let first = *bytes.first()?;
        if first.is_ascii_whitespace() {
            return None;
        }
        if let Ok(s) = std::str::from_utf8(bytes) {
            if s.starts_with(char::is_whitespace) {
                return None;
            }
        }
        // Skip duplicates such as byte-fallback spellings of the same bytes.
        (vocab.id_of_bytes(bytes) == Some(id)).then_some((id, bytes))
    })
}

fn twin_of(vocab: &Vocabulary, prefix: u8, bare_id: u32, bare: &[u8]) -> Option<u32> {
    let mut key = Vec::with_capacity(bare.len() + 1);
    key.push(prefix);
    key.extend_from_slice(bare);
    vocab.id_of_bytes(&key).filter(|&id| id != bare_id)
}

/// Every `(" " ++ t, t)` pair present as two single tokens, ordered by
/// `bare_id`. Only an ASCII space counts as the leading whitespace.
pub fn find_lw_pairs(vocab: &Vocabulary) -> Vec<LwPair> {
    bare_candidates(vocab)
        .filter_map(|(bare_id, bare)| {
            twin_of(vocab, b' ', bare_id, bare).map(|lw_id| LwPair { lw_id, bare_id })
        })
        .collect()
}

/// Twins formed with other leading whitespace. Reported, not used as pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TwinCounts {
    pub space: usize,
    pub tab: usize,
    pub newline: usize,
}

pub fn whitespace_twins(vocab: &Vocabulary) -> TwinCounts {
    let mut counts = TwinCounts::default();
    for (id, bare) in bare_candidates(vocab) {
        counts.space += usize::from(twin_of(vocab, b' ', id, bare).is_some());
        counts.tab += usize::from(twin_of(vocab, b'\t', id, bare).is_some());
        counts.newline += usize::from(twin_of(vocab, b'\n', id, bare).is_some());
    }
    counts
}

/// Distinct token ids appearing in any pair, over vocabulary size.
pub fn pair_participation_rate(vocab: &Vocabulary, pairs: &[LwPair]) -> f64 {
    if vocab.is_empty() {
        return 0.0;
    }
    let ids: BTreeSet<u32> = pairs.iter().flat_map(|p| [p.lw_id, p.bare_id]).collect();
    ids.len() as f64 / vocab.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairStats {
    pub vocab_size: usize,
    pub pairs: usize,
    pub participating_tokens: usize,
    /// Member tokens over vocabulary size.
    pub participation_rate: f64,
    /// Pairs over vocabulary size ("one token in N has a twin").
    pub pair_rate: f64,
    pub twins: TwinCounts,
}

pub fn pair_stats(vocab: &Vocabulary, pairs: &[LwPair]) -> PairStats {
    let ids: BTreeSet<u32> = pairs.iter().flat_map(|p| [p.lw_id, p.bare_id]).collect();
    let n = vocab.len().max(1) as f64;
    PairStats {
        vocab_size: vocab.len(),
        pairs: pairs.len(),
        participating_tokens: ids.len(),
        participation_rate: pair_participation_rate(vocab, pairs),
        pair_rate: pairs.len() as f64 / n,
        twins: whitespace_twins(vocab),
    }
}

/// Writes `bare_id,lw_id,surface` rows; `surface` is the bare token's
/// decoded text (lossy for non-UTF-8 bytes).
pub fn write_pairs_csv(
    vocab: &Vocabulary,
    pairs: &[LwPair],
    out: impl std::io::Write,
) -> Result<(), VocabError> {
    let err = |e: csv::Error| VocabError::Malformed(format!("writing pairs: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bare_id", "lw_id", "surface"]).map_err(err)?;
    for p in pairs {
        let bytes = vocab
            .token_bytes(p.bare_id)
            .ok_or(VocabError::IdOutOfRange { id: p.bare_id, len: vocab.len() })?;
        w.write_record([
            p.bare_id.to_string(),
            p.lw_id.to_string(),
            String::from_utf8_lossy(bytes).into_owned(),
        ])
        .map_err(err)?;
    }
    w.flush()
        .map_err(|e| VocabError::Malformed(format!("writing pairs: {e}")))
}

/// Reads rows written by [`write_pairs_csv`]; the surface column is
/// informational and ignored.
pub fn read_pairs_csv(input: impl std::io::Read) -> Result<Vec<LwPair>, VocabError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| VocabError::Malformed(format!("pairs line {line}: {e}")))?;
        let id = |k: usize, name: &str| -> Result<u32, VocabError> {
            rec.get(k)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| VocabError::Malformed(format!("pairs line {line}: bad {name}")))
        };
        out.push(LwPair {
            bare_id: id(0, "bare_id")?,
            lw_id: id(1, "lw_id")?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::{SpecialTokens, SurfaceEncoding};

    fn raw(surfaces: &[&str]) -> Vocabulary {
        Vocabulary::from_surfaces(
            SurfaceEncoding::Raw,
            surfaces.iter().map(|s| (s.to_string(), false)).collect(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn cat_pair() {
        let v = raw(&["cat", " cat", "dog"]);
        let pairs = find_lw_pairs(&v);
        assert_eq!(pairs, vec![LwPair { lw_id: 1, bare_id: 0 }]);
        assert!((pair_participation_rate(&v, &pairs) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn no_space_tokens_no_pairs() {
        let v = raw(&["a", "b", "ab"]);
        let pairs = find_lw_pairs(&v);
        assert!(pairs.is_empty());
        assert_eq!(pair_participation_rate(&v, &pairs), 0.0);
    }

    #[test]
    fn pairs_satisfy_decode_identity() {
        let v = raw(&["x", " x", "\tx", "\nx", " ", "  x", "y", " y"]);
        for p in find_lw_pairs(&v) {
            let lw = v.decode(&[p.lw_id], SpecialTokens::Skip).unwrap();
            let mut expect = b" ".to_vec();
            expect.extend(v.decode(&[p.bare_id], SpecialTokens::Skip).unwrap());
            assert_eq!(lw, expect);
            assert_ne!(p.lw_id, p.bare_id);
        }
        let twins = whitespace_twins(&v);
        assert_eq!(twins, TwinCounts { space: 2, tab: 1, newline: 1 });
    }

    #[test]
    fn sentencepiece_marker_counts_as_space() {
        let v = Vocabulary::from_surfaces(
            SurfaceEncoding::Metaspace,
            vec![("culture".into(), false), ("\u{2581}culture".into(), false)],
            vec![],
        )
        .unwrap();
        assert_eq!(find_lw_pairs(&v), vec![LwPair { lw_id: 1, bare_id: 0 }]);
    }

    #[test]
    fn pairs_csv_round_trip() {
        let v = raw(&["cat", " cat", "a,b", " a,b"]);
        let pairs = find_lw_pairs(&v);
        let mut buf = Vec::new();
        write_pairs_csv(&v, &pairs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "bare_id,lw_id,surface\n0,1,cat\n2,3,\"a,b\"\n");
        assert_eq!(read_pairs_csv(buf.as_slice()).unwrap(), pairs);
        assert!(read_pairs_csv("bare_id,lw_id\nx,1\n".as_bytes()).is_err());
    }
}
