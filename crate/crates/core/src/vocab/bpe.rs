//! Byte-pair encoding.
//!
//! With merges present, text is split into pieces by [`pretokenize`] and
//! each piece is encoded independently: base symbols first, then the
//! lowest-ranked applicable merge is applied until none remains. Without
//! merges the encoder falls back to greedy longest match on decoded bytes.

use super::bytelevel::byte_to_char_table;
use super::{SurfaceEncoding, VocabError, Vocabulary};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Letter,
    Digit,
    Space,
    Other,
}

fn classify(c: char) -> Class {
    if c.is_whitespace() {
        Class::Space
    } else if c.is_alphabetic() {
        Class::Letter
    } else if c.is_numeric() {
        Class::Digit
    } else {
        Class::Other
    }
}

/// GPT-2 flavoured splitter: runs of letters, digits or punctuation, each
/// optionally led by one space; whitespace runs keep their final space for
/// the following word. Concatenating the pieces gives back `text`.
pub fn pretokenize(text: &str) -> Vec<&str> {
    let idx: Vec<(usize, char)> = text.char_indices().collect();
    let n = idx.len();
    let at = |i: usize| if i < n { idx[i].0 } else { text.len() };
    let mut pieces = Vec::new();
    let mut i = 0;
    while i < n {
        let c = idx[i].1;
        let class = classify(c);
        if class == Class::Space {
            let mut k = i;
            while k < n && classify(idx[k].1) == Class::Space {
                k += 1;
            }
            let followed_by_word = k < n;
            if followed_by_word && idx[k - 1].1 == ' ' {
                if k - 1 > i {
                    pieces.push(&text[at(i)..at(k - 1)]);
                }
                // The single space joins the next run.
                let start = k - 1;
                let run = classify(idx[k].1);
                let mut j = k;
                while j < n && classify(idx[j].1) == run {
                    j += 1;
                }
                pieces.push(&text[at(start)..at(j)]);
                i = j;
            } else {
                pieces.push(&text[at(i)..at(k)]);
                i = k;
            }
        } else {
            let mut j = i;
            while j < n && classify(idx[j].1) == class {
                j += 1;
            }
            pieces.push(&text[at(i)..at(j)]);
            i = j;
        }
    }
    pieces
}

impl Vocabulary {
    pub fn encode(&self, text: &str) -> Result<Vec<u32>, VocabError> {
        let mut out = Vec::new();
        if !self.has_merges() {
            self.encode_greedy(text.as_bytes(), &mut out)?;
            return Ok(out);
        }
        for piece in pretokenize(text) {
            self.encode_piece(piece, &mut out)?;
        }
        Ok(out)
    }

    /// Encodes one pre-tokenized piece, appending ids to `out`.
    pub fn encode_piece(&self, piece: &str, out: &mut Vec<u32>) -> Result<(), VocabError> {
        let mut syms = self.base_symbols(piece)?;
        while syms.len() > 1 {
            let mut best: Option<(u32, usize, u32)> = None;
            for i in 0..syms.len() - 1 {
                if let Some(&(rank, merged)) = self.merge_ranks.get(&(syms[i], syms[i + 1])) {
                    if best.is_none_or(|(r, _, _)| rank < r) {
                        best = Some((rank, i, merged));
                    }
                }
            }
            let Some((_, i, merged)) = best else { break };
            syms[i] = merged;
            syms.remove(i + 1);
        }
        out.extend(syms);
        Ok(())
    }

    fn base_symbols(&self, piece: &str) -> Result<Vec<u32>, VocabError> {
        let mut syms = Vec::with_capacity(piece.len());
        match self.encoding {
            SurfaceEncoding::ByteLevel => {
                let table = byte_to_char_table();
                let mut buf = [0u8; 4];
                for b in piece.bytes() {
                    let s = table[b as usize].encode_utf8(&mut buf);
                    let id = self
                        .id_of_surface(s)
                        .ok_or_else(|| VocabError::Unencodable(format!("byte 0x{b:02X}")))?;
                    syms.push(id);
                }
            }
            SurfaceEncoding::Metaspace | SurfaceEncoding::Raw => {
                let mut buf = [0u8; 4];
                for c in piece.chars() {
                    let mapped = if self.encoding == SurfaceEncoding::Metaspace && c == ' ' {
                        '\u{2581}'
                    } else {
                        c
                    };
                    let s = mapped.encode_utf8(&mut buf);
                    if let Some(id) = self.id_of_surface(s) {
                        syms.push(id);
                        continue;
                    }
                    let mut raw = [0u8; 4];
                    for &b in c.encode_utf8(&mut raw).as_bytes() {
                        let id = self
                            .id_of_surface(&format!("<0x{b:02X}>"))
                            .or_else(|| self.id_of_bytes(&[b]))
                            .ok_or_else(|| VocabError::Unencodable(c.to_string()))?;
                        syms.push(id);
                    }
                }
            }
        }
        Ok(syms)
    }

    fn encode_greedy(&self, bytes: &[u8], out: &mut Vec<u32>) -> Result<(), VocabError> {
        let mut i = 0;
        while i < bytes.len() {
            let longest = self.max_token_bytes.min(bytes.len() - i);
            let hit = (1..=longest)
                .rev()
                .find_map(|len| self.id_of_bytes(&bytes[i..i + len]).map(|id| (id, len)));
            let Some((id, len)) = hit else {
                return Err(VocabError::Unencodable(format!("byte 0x{:02X} at offset {i}", bytes[i])));
            };
            out.push(id);
            i += len;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::{bytes_to_surface, SpecialTokens};

    #[test]
    fn pieces_concatenate_back() {
        let text = "Hello,  world!\n\n  42 cats\tand dogs ";
        let pieces = pretokenize(text);
        assert_eq!(pieces.concat(), text);
        assert!(pieces.contains(&" world"));
        assert!(pieces.contains(&" cats"));
        assert!(pieces.contains(&" 42"));
    }

    #[test]
    fn toy_bpe_the() {
        let mut tokens: Vec<(String, bool)> = ('a'..='z').map(|c| (c.to_string(), false)).collect();
        tokens.push(("th".into(), false));
        let v = Vocabulary::from_surfaces(SurfaceEncoding::Raw, tokens, vec![("t".into(), "h".into())])
            .unwrap();
        let ids = v.encode("the").unwrap();
        let surfaces: Vec<&str> = ids.iter().map(|&i| v.surface(i).unwrap()).collect();
        assert_eq!(surfaces, vec!["th", "e"]);
        assert!(v.encode("").unwrap().is_empty());
    }

    #[test]
    fn merge_priority_follows_rank() {
        // "abc": (b,c) outranks (a,b), so the result is a + bc.
        let tokens = ["a", "b", "c", "ab", "bc"]
            .iter()
            .map(|s| (s.to_string(), false))
            .collect();
        let v = Vocabulary::from_surfaces(
            SurfaceEncoding::Raw,
            tokens,
            vec![("b".into(), "c".into()), ("a".into(), "b".into())],
        )
        .unwrap();
        let ids = v.encode("abc").unwrap();
        assert_eq!(ids, vec![0, 4]);
    }

    #[test]
    fn byte_level_round_trip_with_unicode() {
        let mut tokens: Vec<(String, bool)> =
            (0..=255u8).map(|b| (bytes_to_surface(&[b]), false)).collect();
        tokens.push(("Ġc".into(), false));
        tokens.push(("at".into(), false));
        let v = Vocabulary::from_surfaces(
            SurfaceEncoding::ByteLevel,
            tokens,
            vec![("Ġ".into(), "c".into()), ("a".into(), "t".into())],
        )
        .unwrap();
        let text = "a cat, ünïcødé ☃\n";
        let ids = v.encode(text).unwrap();
        assert_eq!(v.decode(&ids, SpecialTokens::Skip).unwrap(), text.as_bytes());
        assert!(ids.contains(&256));
    }

    #[test]
    fn greedy_fallback_and_unencodable() {
        let v = Vocabulary::from_surfaces(
            SurfaceEncoding::Raw,
            vec![("cat".into(), false), (" cat".into(), false)],
            vec![],
        )
        .unwrap();
        assert_eq!(v.encode("cat cat cat").unwrap(), vec![0, 1, 1]);
        assert!(matches!(v.encode("dog"), Err(VocabError::Unencodable(_))));
    }
}
