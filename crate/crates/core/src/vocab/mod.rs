//! Tokenizer vocabularies: loading, byte-level BPE encode/decode, and
//! leading-whitespace twin mining.

mod bpe;
mod bytelevel;
mod load;
mod pairs;
mod trie;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bpe::pretokenize;
pub use bytelevel::{byte_to_char_table, bytes_to_surface, surface_to_bytes};
pub use load::load_vocab;
pub use pairs::{
    find_lw_pairs, pair_participation_rate, pair_stats, read_pairs_csv, whitespace_twins,
    write_pairs_csv, LwPair, PairStats, TwinCounts,
};
pub use trie::TokenTrie;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed tokenizer description: {0}")]
    Malformed(String),
    #[error("surface {surface:?} appears as both id {first} and id {second}")]
    DuplicateSurface {
        surface: String,
        first: u32,
        second: u32,
    },
    #[error("id {id} is assigned to both {first:?} and {second:?}")]
    DuplicateId {
        id: u32,
        first: String,
        second: String,
    },
    #[error("token ids are not dense: id {missing} is missing")]
    NonDense { missing: u32 },
    #[error("merge ({left:?}, {right:?}) refers to unknown tokens")]
    UnknownMerge { left: String, right: String },
    #[error("cannot encode {0:?}: no token covers it")]
    Unencodable(String),
    #[error("token id {id} out of range for vocabulary of {len}")]
    IdOutOfRange { id: u32, len: usize },
    #[error("unsupported tokenizer: {0}")]
    Unsupported(String),
}

/// How surfaces in the vocabulary file spell raw bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceEncoding {
    /// GPT-2 byte-to-character table (`Ġ` for space).
    ByteLevel,
    /// SentencePiece style: `▁` for space, `<0xHH>` byte-fallback tokens.
    Metaspace,
    /// Surfaces are the literal UTF-8 text.
    Raw,
}

impl SurfaceEncoding {
    pub fn surface_to_bytes(self, surface: &str) -> Vec<u8> {
        match self {
            SurfaceEncoding::ByteLevel => surface_to_bytes(surface),
            SurfaceEncoding::Metaspace => match parse_byte_fallback(surface) {
                Some(b) => vec![b],
                None => surface.replace('\u{2581}', " ").into_bytes(),
            },
            SurfaceEncoding::Raw => surface.as_bytes().to_vec(),
        }
    }
}

/// Parses `<0xHH>`.
pub(crate) fn parse_byte_fallback(surface: &str) -> Option<u8> {
    let hex = surface.strip_prefix("<0x")?.strip_suffix('>')?;
    if hex.len() != 2 {
        return None;
    }
    u8::from_str_radix(hex, 16).ok()
}

/// How special tokens render in [`Vocabulary::decode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpecialTokens {
    #[default]
    Skip,
    /// Emit the token's surface, e.g. `<|eot_id|>`.
    Marker,
}

#[derive(Debug, Clone)]
pub(crate) struct TokenEntry {
    pub surface: String,
    pub bytes: Vec<u8>,
    pub special: bool,
}

/// Token table with merge rules. Immutable once built; safe to share.
#[derive(Debug)]
pub struct Vocabulary {
    entries: Vec<TokenEntry>,
    by_surface: HashMap<String, u32>,
    by_bytes: HashMap<Vec<u8>, u32>,
    merges: Vec<(String, String)>,
    merge_ranks: HashMap<(u32, u32), (u32, u32)>,
    encoding: SurfaceEncoding,
    max_token_bytes: usize,
    trie: OnceLock<TokenTrie>,
}

impl Vocabulary {
    /// Builds a vocabulary where token `i` has the `i`-th surface. Surfaces
    /// are spelled in `encoding`; the flag marks special tokens.
    pub fn from_surfaces(
        encoding: SurfaceEncoding,
        tokens: Vec<(String, bool)>,
        merges: Vec<(String, String)>,
    ) -> Result<Self, VocabError> {
        let entries = tokens
            .into_iter()
            .map(|(surface, special)| TokenEntry {
                bytes: if special {
                    surface.as_bytes().to_vec()
                } else {
                    encoding.surface_to_bytes(&surface)
                },
                surface,
                special,
            })
            .collect();
        Self::from_entries(encoding, entries, merges)
    }

    pub(crate) fn from_entries(
        encoding: SurfaceEncoding,
        entries: Vec<TokenEntry>,
        merges: Vec<(String, String)>,
    ) -> Result<Self, VocabError> {
        let mut by_surface = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if let Some(first) = by_surface.insert(e.surface.clone(), i as u32) {
                return Err(VocabError::DuplicateSurface {
                    surface: e.surface.clone(),
                    first,
                    second: i as u32,
                });
            }
        }

        // Canonical id per byte string: regular tokens win over byte
        // fallbacks, lower ids win ties. Special tokens are never canonical.
        let mut by_bytes: HashMap<Vec<u8>, u32> = HashMap::with_capacity(entries.len());
        let is_fallback =
            |e: &TokenEntry| encoding == SurfaceEncoding::Metaspace && parse_byte_fallback(&e.surface).is_some();
        for pass_fallback in [false, true] {
            for (i, e) in entries.iter().enumerate() {
                if e.special || is_fallback(e) != pass_fallback {
                    continue;
                }
                by_bytes.entry(e.bytes.clone()).or_insert(i as u32);
            }
        }

        let mut merge_ranks = HashMap::with_capacity(merges.len());
        for (rank, (left, right)) in merges.iter().enumerate() {
            let ids = (
                by_surface.get(left),
                by_surface.get(right),
                by_surface.get(&format!("{left}{right}")),
            );
            let (Some(&l), Some(&r), Some(&m)) = ids else {
                return Err(VocabError::UnknownMerge {
                    left: left.clone(),
                    right: right.clone(),
                });
            };
            merge_ranks.entry((l, r)).or_insert((rank as u32, m));
        }

        let max_token_bytes = entries
            .iter()
            .filter(|e| !e.special)
            .map(|e| e.bytes.len())
            .max()
            .unwrap_or(0);

        Ok(Vocabulary {
            entries,
            by_surface,
            by_bytes,
            merges,
            merge_ranks,
            encoding,
            max_token_bytes,
            trie: OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn encoding(&self) -> SurfaceEncoding {
        self.encoding
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn has_merges(&self) -> bool {
        !self.merge_ranks.is_empty()
    }

    /// Surface as spelled in the tokenizer file.
    pub fn surface(&self, id: u32) -> Option<&str> {
        self.entries.get(id as usize).map(|e| e.surface.as_str())
    }

    pub fn token_bytes(&self, id: u32) -> Option<&[u8]> {
        self.entries.get(id as usize).map(|e| e.bytes.as_slice())
    }

    pub fn is_special(&self, id: u32) -> bool {
        self.entries.get(id as usize).is_some_and(|e| e.special)
    }

    pub fn special_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.special)
            .map(|(i, _)| i as u32)
    }

    /// Decoded text of a regular token, or `None` for special tokens and
    /// byte strings that are not valid UTF-8. This is what grammar masks
    /// match against.
    pub fn token_str(&self, id: u32) -> Option<&str> {
        let e = self.entries.get(id as usize)?;
        if e.special {
            return None;
        }
        std::str::from_utf8(&e.bytes).ok()
    }

    pub fn id_of_surface(&self, surface: &str) -> Option<u32> {
        self.by_surface.get(surface).copied()
    }

    /// Canonical regular token whose decoded bytes equal `bytes`.
    pub fn id_of_bytes(&self, bytes: &[u8]) -> Option<u32> {
        self.by_bytes.get(bytes).copied()
    }

    /// Prefix tree over [`Self::token_str`], built on first use.
    pub fn trie(&self) -> &TokenTrie {
        self.trie.get_or_init(|| {
            TokenTrie::build((0..self.len() as u32).filter_map(|id| self.token_str(id).map(|s| (id, s))))
        })
    }

    pub fn decode(&self, ids: &[u32], special: SpecialTokens) -> Result<Vec<u8>, VocabError> {
        let mut out = Vec::new();
        for &id in ids {
            let e = self.entries.get(id as usize).ok_or(VocabError::IdOutOfRange {
                id,
                len: self.len(),
            })?;
            if e.special && special == SpecialTokens::Skip {
                continue;
            }
            out.extend_from_slice(&e.bytes);
        }
        Ok(out)
    }

    /// Fewest tokens whose decoded bytes concatenate to `text`, ignoring
    /// merge rules. `None` when no segmentation exists.
    pub fn min_token_count(&self, text: &str) -> Option<usize> {
        let bytes = text.as_bytes();
        let n = bytes.len();
        let mut best = vec![usize::MAX; n + 1];
        best[0] = 0;
        for i in 0..n {
            if best[i] == usize::MAX {
                continue;
            }
            for len in 1..=self.max_token_bytes.min(n - i) {
                if self.by_bytes.contains_key(&bytes[i..i + len]) {
                    best[i + len] = best[i + len].min(best[i] + 1);
                }
            }
        }
        (best[n] != usize::MAX).then_some(best[n])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn letters_with_th() -> Vocabulary {
        let mut tokens: Vec<(String, bool)> = ('a'..='z').map(|c| (c.to_string(), false)).collect();
        tokens.push(("th".into(), false));
        Vocabulary::from_surfaces(SurfaceEncoding::Raw, tokens, vec![("t".into(), "h".into())]).unwrap()
    }

    #[test]
    fn duplicate_surface_rejected() {
        let err = Vocabulary::from_surfaces(
            SurfaceEncoding::Raw,
            vec![("a".into(), false), ("a".into(), false)],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, VocabError::DuplicateSurface { first: 0, second: 1, .. }));
    }

    #[test]
    fn decode_basics() {
        let v = letters_with_th();
        assert_eq!(v.decode(&[], SpecialTokens::Skip).unwrap(), b"");
        let th = v.id_of_surface("th").unwrap();
        let e = v.id_of_surface("e").unwrap();
        assert_eq!(v.decode(&[th, e], SpecialTokens::Skip).unwrap(), b"the");
        assert!(matches!(
            v.decode(&[999], SpecialTokens::Skip),
            Err(VocabError::IdOutOfRange { id: 999, .. })
        ));
    }

    #[test]
    fn special_decode_switch() {
        let v = Vocabulary::from_surfaces(
            SurfaceEncoding::Raw,
            vec![("a".into(), false), ("<eos>".into(), true)],
            vec![],
        )
        .unwrap();
        assert_eq!(v.decode(&[0, 1], SpecialTokens::Skip).unwrap(), b"a");
        assert_eq!(v.decode(&[0, 1], SpecialTokens::Marker).unwrap(), b"a<eos>");
        assert_eq!(v.token_str(1), None);
    }

    #[test]
    fn metaspace_surfaces() {
        let v = Vocabulary::from_surfaces(
            SurfaceEncoding::Metaspace,
            vec![("<0x20>".into(), false), ("\u{2581}".into(), false), ("\u{2581}cat".into(), false)],
            vec![],
        )
        .unwrap();
        assert_eq!(v.token_bytes(2).unwrap(), b" cat");
        // Regular token wins over the byte fallback for the same bytes.
        assert_eq!(v.id_of_bytes(b" "), Some(1));
    }

    #[test]
    fn min_token_count_uses_longest_pieces() {
        let v = letters_with_th();
        assert_eq!(v.min_token_count("the"), Some(2));
        assert_eq!(v.min_token_count(""), Some(0));
        assert_eq!(v.min_token_count("THE"), None);
    }
}
