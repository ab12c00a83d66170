//! Loader for JSON tokenizer descriptions.
//!
//! Two layouts are accepted:
//!
//! - the common `tokenizer.json` layout: `model.vocab` (surface -> id),
//!   `model.merges` (`"a b"` strings or `["a", "b"]` arrays) and
//!   `added_tokens` (`{id, content, special}`);
//! - a flat layout with top-level `vocab`, `merges`, optional
//!   `special_tokens` (list of surfaces) and optional `encoding`
//!   (`byte_level`, `metaspace` or `raw`).
//!
//! When `encoding` is absent it is inferred from the `decoder` /
//! `pre_tokenizer` sections, then from the surfaces themselves.

use std::fmt;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer};

use super::{SurfaceEncoding, TokenEntry, VocabError, Vocabulary};

/// Map entries in file order, duplicates preserved.
struct VocabEntries(Vec<(String, u32)>);

impl<'de> Deserialize<'de> for VocabEntries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = VocabEntries;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from token surface to id")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<VocabEntries, A::Error> {
                let mut out = Vec::with_capacity(map.size_hint().unwrap_or(0));
                while let Some((k, v)) = map.next_entry::<String, u32>()? {
                    out.push((k, v));
                }
                Ok(VocabEntries(out))
            }
        }
        d.deserialize_map(V)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MergeEntry {
    Joined(String),
    Pair(String, String),
}

impl MergeEntry {
    fn split(self) -> Result<(String, String), VocabError> {
        match self {
            MergeEntry::Pair(a, b) => Ok((a, b)),
            MergeEntry::Joined(s) => {
                let (a, b) = s
                    .split_once(' ')
                    .ok_or_else(|| VocabError::Malformed(format!("merge {s:?} has no separator")))?;
                Ok((a.to_string(), b.to_string()))
            }
        }
    }
}

#[derive(Deserialize)]
struct AddedToken {
    id: u32,
    content: String,
    #[serde(default)]
    special: bool,
}

#[derive(Deserialize)]
struct ModelSection {
    #[serde(rename = "type")]
    kind: Option<String>,
    vocab: VocabEntries,
    #[serde(default)]
    merges: Vec<MergeEntry>,
}

#[derive(Deserialize)]
struct TokenizerFile {
    #[serde(default)]
    added_tokens: Vec<AddedToken>,
    model: Option<ModelSection>,
    vocab: Option<VocabEntries>,
    #[serde(default)]
    merges: Vec<MergeEntry>,
    #[serde(default)]
    special_tokens: Vec<String>,
    encoding: Option<SurfaceEncoding>,
    decoder: Option<serde_json::Value>,
    pre_tokenizer: Option<serde_json::Value>,
}

pub fn load_vocab(path: impl AsRef<Path>) -> Result<Vocabulary, VocabError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| VocabError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Vocabulary::from_json_str(&text)
}

fn infer_encoding(file: &TokenizerFile, vocab: &[(String, u32)]) -> SurfaceEncoding {
    for section in [&file.decoder, &file.pre_tokenizer].into_iter().flatten() {
        let s = section.to_string();
        if s.contains("\"ByteLevel\"") {
            return SurfaceEncoding::ByteLevel;
        }
        if s.contains("\"Metaspace\"") || s.contains('\u{2581}') {
            return SurfaceEncoding::Metaspace;
        }
    }
    if vocab.iter().any(|(s, _)| s.contains('Ġ')) {
        SurfaceEncoding::ByteLevel
    } else if vocab.iter().any(|(s, _)| s.contains('\u{2581}')) {
        SurfaceEncoding::Metaspace
    } else {
        SurfaceEncoding::Raw
    }
}

impl Vocabulary {
    pub fn from_json_str(text: &str) -> Result<Self, VocabError> {
        let mut file: TokenizerFile =
            serde_json::from_str(text).map_err(|e| VocabError::Malformed(e.to_string()))?;

        let (vocab, merges) = match (file.model.take(), file.vocab.take()) {
            (Some(model), _) => {
                if let Some(kind) = &model.kind {
                    if kind != "BPE" && kind != "WordLevel" {
                        return Err(VocabError::Unsupported(format!("model type {kind}")));
                    }
                }
                (model.vocab.0, model.merges)
            }
            (None, Some(vocab)) => (vocab.0, std::mem::take(&mut file.merges)),
            (None, None) => return Err(VocabError::Malformed("no `vocab` found".into())),
        };
        let encoding = file.encoding.unwrap_or_else(|| infer_encoding(&file, &vocab));

        // id -> (surface, literal bytes for added tokens, special)
        let max_id = vocab
            .iter()
            .map(|(_, id)| *id)
            .chain(file.added_tokens.iter().map(|t| t.id))
            .max();
        let Some(max_id) = max_id else {
            return Vocabulary::from_entries(encoding, Vec::new(), Vec::new());
        };
        let mut slots: Vec<Option<TokenEntry>> = vec![None; max_id as usize + 1];

        let mut place = |id: u32, entry: TokenEntry| -> Result<(), VocabError> {
            let slot = &mut slots[id as usize];
            match slot {
                Some(existing) if existing.surface == entry.surface => {
                    existing.special |= entry.special;
                    if entry.special {
                        existing.bytes = entry.bytes;
                    }
                    Ok(())
                }
                Some(existing) => Err(VocabError::DuplicateId {
                    id,
                    first: existing.surface.clone(),
                    second: entry.surface,
                }),
                None => {
                    *slot = Some(entry);
                    Ok(())
                }
            }
        };

        for (surface, id) in vocab {
            let special = file.special_tokens.contains(&surface);
            let bytes = if special {
                surface.as_bytes().to_vec()
            } else {
                encoding.surface_to_bytes(&surface)
            };
            place(id, TokenEntry { surface, bytes, special })?;
        }
        for t in file.added_tokens {
            place(
                t.id,
                TokenEntry {
                    bytes: t.content.as_bytes().to_vec(),
                    surface: t.content,
                    special: t.special,
                },
            )?;
        }

        let mut entries = Vec::with_capacity(slots.len());
        for (id, slot) in slots.into_iter().enumerate() {
            entries.push(slot.ok_or(VocabError::NonDense { missing: id as u32 })?);
        }
        let merges = merges
            .into_iter()
            .map(MergeEntry::split)
            .collect::<Result<Vec<_>, _>>()?;
        Vocabulary::from_entries(encoding, entries, merges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_layout() {
        let v = Vocabulary::from_json_str(
            r#"{"vocab": {"a": 0, "b": 1, "ab": 2, "<s>": 3}, "merges": ["a b"], "special_tokens": ["<s>"]}"#,
        )
        .unwrap();
        assert_eq!(v.len(), 4);
        assert!(v.is_special(3));
        assert_eq!(v.encode("ab").unwrap(), vec![2]);
        assert_eq!(v.encoding(), SurfaceEncoding::Raw);
    }

    #[test]
    fn hf_layout_byte_level() {
        let v = Vocabulary::from_json_str(
            r#"{
              "added_tokens": [{"id": 4, "content": "<|end|>", "special": true}],
              "decoder": {"type": "ByteLevel"},
              "model": {"type": "BPE", "vocab": {"Ġ": 0, "c": 1, "Ġc": 2, "x": 3}, "merges": [["Ġ", "c"]]}
            }"#,
        )
        .unwrap();
        assert_eq!(v.encoding(), SurfaceEncoding::ByteLevel);
        assert_eq!(v.token_bytes(2).unwrap(), b" c");
        assert_eq!(v.token_bytes(4).unwrap(), b"<|end|>");
        assert!(v.is_special(4));
    }

    #[test]
    fn duplicate_surface_in_file() {
        let err = Vocabulary::from_json_str(r#"{"vocab": {"a": 0, "a": 1}}"#).unwrap_err();
        assert!(matches!(err, VocabError::DuplicateSurface { .. }));
    }

    #[test]
    fn non_dense_ids() {
        let err = Vocabulary::from_json_str(r#"{"vocab": {"a": 0, "b": 2}}"#).unwrap_err();
        assert!(matches!(err, VocabError::NonDense { missing: 1 }));
    }

    #[test]
    fn id_collision() {
        let err = Vocabulary::from_json_str(r#"{"vocab": {"a": 0, "b": 0}}"#).unwrap_err();
        assert!(matches!(err, VocabError::DuplicateId { id: 0, .. }));
    }

    #[test]
    fn garbage_is_malformed() {
        assert!(matches!(
            Vocabulary::from_json_str("not json"),
            Err(VocabError::Malformed(_))
        ));
        assert!(matches!(
            Vocabulary::from_json_str(r#"{"model": {"type": "Unigram", "vocab": {}}}"#),
            Err(VocabError::Unsupported(_))
        ));
    }
}
