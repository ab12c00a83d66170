//! GPT-2 style byte <-> printable-character table used by byte-level BPE
//! vocabularies. Printable Latin-1 bytes map to themselves, the remaining
//! 68 bytes map to U+0100 onwards.

use std::collections::HashMap;
use std::sync::OnceLock;

fn is_printable(b: u8) -> bool {
    matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF)
}

pub fn byte_to_char_table() -> &'static [char; 256] {
    static TABLE: OnceLock<[char; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = ['\0'; 256];
        let mut n = 0u32;
        for b in 0..=255u8 {
            table[b as usize] = if is_printable(b) {
                char::from(b)
            } else {
                let c = char::from_u32(256 + n).expect("U+0100.. are scalars");
                n += 1;
                c
            };
        }
        table
    })
}

pub fn char_to_byte_table() -> &'static HashMap<char, u8> {
    static TABLE: OnceLock<HashMap<char, u8>> = OnceLock::new();
    TABLE.get_or_init(|| {
        byte_to_char_table()
            .iter()
            .enumerate()
            .map(|(b, &c)| (c, b as u8))
            .collect()
    })
}

/// Maps a byte-level surface back to raw bytes. Characters outside the
/// table pass through as UTF-8.
pub fn surface_to_bytes(surface: &str) -> Vec<u8> {
    let table = char_to_byte_table();
    let mut out = Vec::with_capacity(surface.len());
    for c in surface.chars() {
        match table.get(&c) {
            Some(&b) => out.push(b),
            None => {
                let mut buf = [0u8; 4];
                out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            }
        }
    }
    out
}

pub fn bytes_to_surface(bytes: &[u8]) -> String {
    let table = byte_to_char_table();
    bytes.iter().map(|&b| table[b as usize]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_a_bijection() {
        let t = byte_to_char_table();
        let mut seen: Vec<char> = t.to_vec();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 256);
        assert_eq!(t[b' ' as usize], 'Ġ');
        assert_eq!(t[b'\n' as usize], 'Ċ');
        assert_eq!(t[b'a' as usize], 'a');
    }

    #[test]
    fn surfaces_round_trip() {
        let all: Vec<u8> = (0..=255).collect();
        assert_eq!(surface_to_bytes(&bytes_to_surface(&all)), all);
        assert_eq!(surface_to_bytes("Ġculture"), b" culture");
    }
}
