//! Generators and brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};
use std::path::PathBuf;

use gcd_audit::grammar::{compile_gbnf, CompiledGrammar, ConstraintState};
use gcd_audit::vocab::{bytes_to_surface, SurfaceEncoding, Vocabulary};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

const ALPHABET: [char; 6] = ['a', 'b', 'c', '1', ' ', 'é'];

fn escape_literal(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn random_word(rng: &mut impl Rng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    (0..n).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

fn random_class(rng: &mut impl Rng) -> String {
    match rng.gen_range(0..4) {
        0 => "[a-c]".into(),
        1 => "[a1]".into(),
        2 => "[^b]".into(),
        _ => "[ é]".into(),
    }
}

fn random_element(rng: &mut impl Rng, rule: usize, rules: usize) -> String {
    let base = match rng.gen_range(0..5) {
        0 | 1 => format!("\"{}\"", escape_literal(&random_word(rng, 1, 2))),
        2 => random_class(rng),
        3 if rule + 1 < rules => format!("r{}", rng.gen_range(rule + 1..rules)),
        _ => format!(
            "(\"{}\" | \"{}\")",
            escape_literal(&random_word(rng, 1, 2)),
            escape_literal(&random_word(rng, 0, 2))
        ),
    };
    let op = ["", "", "", "*", "+", "?"].choose(rng).unwrap();
    format!("{base}{op}")
}

/// A random grammar over a small alphabet. Rules only reference later
/// rules, except for right recursion behind a non-empty literal.
pub fn random_grammar_text(rng: &mut impl Rng) -> String {
    let rules = rng.gen_range(1..=4);
    let mut out = String::new();
    for i in 0..rules {
        let name = if i == 0 { "root".to_string() } else { format!("r{i}") };
        let alts = rng.gen_range(1..=3);
        let mut bodies = Vec::new();
        for _ in 0..alts {
            let len = rng.gen_range(1..=3);
            let mut seq: Vec<String> = (0..len).map(|_| random_element(rng, i, rules)).collect();
            if i > 0 && rng.gen_bool(0.15) {
                seq.insert(0, format!("\"{}\"", escape_literal(&random_word(rng, 1, 1))));
                seq.push(name.clone());
            }
            bodies.push(seq.join(" "));
        }
        out.push_str(&format!("{name} ::= {}\n", bodies.join(" | ")));
    }
    out
}

/// Compiles a fresh random grammar, retrying generator outputs the compiler
/// refuses.
pub fn random_grammar(rng: &mut impl Rng) -> (String, CompiledGrammar) {
    loop {
        let text = random_grammar_text(rng);
        if let Ok(g) = compile_gbnf(&text) {
            return (text, g);
        }
    }
}

/// Byte-level vocabulary of short strings over the alphabet, including a
/// special token, an empty-string-free set of partial UTF-8 bytes, and the
/// single characters.
pub fn random_vocab(rng: &mut impl Rng) -> Vocabulary {
    let mut tokens: Vec<Vec<u8>> = ALPHABET.iter().map(|c| c.to_string().into_bytes()).collect();
    // Halves of 'é' (0xC3 0xA9): never valid alone.
    tokens.push(vec![0xC3]);
    tokens.push(vec![0xA9]);
    let extra = rng.gen_range(5..40);
    for _ in 0..extra {
        let w = random_word(rng, 2, 4).into_bytes();
        if !tokens.contains(&w) {
            tokens.push(w);
        }
    }
    tokens.shuffle(rng);
    let mut surfaces: Vec<(String, bool)> =
        tokens.iter().map(|b| (bytes_to_surface(b), false)).collect();
    let at = rng.gen_range(0..=surfaces.len());
    surfaces.insert(at, ("<|end|>".to_string(), true));
    Vocabulary::from_surfaces(SurfaceEncoding::ByteLevel, surfaces, vec![]).expect("valid vocab")
}

/// A prefix: usually walked through the grammar, sometimes arbitrary.
pub fn random_prefix(rng: &mut impl Rng, g: &CompiledGrammar) -> String {
    if rng.gen_bool(0.2) {
        return random_word(rng, 0, 3);
    }
    let mut s = String::new();
    let mut state = g.initial_state().unwrap();
    let steps = rng.gen_range(0..6);
    for _ in 0..steps {
        let viable: Vec<char> = ALPHABET
            .iter()
            .copied()
            .filter(|&c| !g.advance_char(&state, c).map(|n| n.is_rejected()).unwrap_or(true))
            .collect();
        let Some(&c) = viable.choose(rng) else { break };
        state = g.advance_char(&state, c).unwrap();
        s.push(c);
    }
    s
}

/// Brute-force mask: a regular, UTF-8 token is allowed when the state
/// survives consuming its text.
pub fn oracle_mask(g: &CompiledGrammar, state: &ConstraintState, vocab: &Vocabulary) -> Vec<u32> {
    (0..vocab.len() as u32)
        .filter(|&id| {
            if vocab.is_special(id) {
                return false;
            }
            let Some(bytes) = vocab.token_bytes(id) else { return false };
            let Ok(text) = std::str::from_utf8(bytes) else { return false };
            g.advance_text(state, text).map(|s| !s.is_rejected()).unwrap_or(false)
        })
        .collect()
}

/// Outcome of one randomized mask case.
pub enum MaskCase {
    Match,
    RejectedPrefix,
    Mismatch(String),
}

pub fn check_mask_case(rng: &mut impl Rng) -> MaskCase {
    let (text, g) = random_grammar(rng);
    let vocab = random_vocab(rng);
    let prefix = random_prefix(rng, &g);
    let state = g.advance_text(&g.initial_state().unwrap(), &prefix).unwrap();
    if state.is_rejected() {
        return match g.allowed_tokens(&state, &vocab) {
            Err(_) => MaskCase::RejectedPrefix,
            Ok(_) => MaskCase::Mismatch(format!("mask of rejected state returned Ok\n{text}")),
        };
    }
    let mask = g.allowed_tokens(&state, &vocab).unwrap();
    let got: Vec<u32> = mask.allowed_ids().collect();
    let want = oracle_mask(&g, &state, &vocab);
    if got != want {
        return MaskCase::Mismatch(format!(
            "grammar:\n{text}prefix {prefix:?}\ngot {got:?}\nwant {want:?}"
        ));
    }
    if mask.eos_allowed() != state.is_terminable() {
        return MaskCase::Mismatch(format!("eos flag differs\n{text}prefix {prefix:?}"));
    }
    MaskCase::Match
}

/// Ranks by counting: 1 + #smaller + (#equal - 1) / 2.
pub fn oracle_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as f64;
            let eq = xs.iter().filter(|&&y| y == x).count() as f64;
            1.0 + less + (eq - 1.0) / 2.0
        })
        .collect()
}

/// Textbook Pearson with naive sums; `None` for a constant side.
pub fn oracle_pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

pub fn oracle_spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    oracle_pearson(&oracle_ranks(xs), &oracle_ranks(ys))
}

pub fn oracle_mse(xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter().zip(ys).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Every permutation of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// All strings over `alphabet` with length at most `max_len`.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &c in alphabet {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Breadth-first search over single-character edits, confined to strings
/// over `alphabet` no longer than `max_len`. Returns the distance from
/// `src` to every reachable string.
pub fn edit_bfs(src: &str, alphabet: &[char], max_len: usize) -> HashMap<String, usize> {
    let mut dist = HashMap::new();
    dist.insert(src.to_string(), 0);
    let mut queue = VecDeque::from([src.to_string()]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        let chars: Vec<char> = s.chars().collect();
        let mut next = Vec::new();
        for i in 0..chars.len() {
            let mut del = chars.clone();
            del.remove(i);
            next.push(del);
            for &c in alphabet {
                if c != chars[i] {
                    let mut sub = chars.clone();
                    sub[i] = c;
                    next.push(sub);
                }
            }
        }
        if chars.len() < max_len {
            for i in 0..=chars.len() {
                for &c in alphabet {
                    let mut ins = chars.clone();
                    ins.insert(i, c);
                    next.push(ins);
                }
            }
        }
        for n in next {
            let t: String = n.into_iter().collect();
            if !dist.contains_key(&t) {
                dist.insert(t.clone(), d + 1);
                queue.push_back(t);
            }
        }
    }
    dist
}
