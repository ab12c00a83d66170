//! GBNF grammars: parsing, compilation and incremental recognition.
//!
//! Recognition works on Unicode scalar values. [`CompiledGrammar`] and
//! [`ConstraintState`] are immutable values and can be shared freely across
//! threads.

mod ast;
mod compile;
mod mask;
mod parse;
mod recognizer;

use std::collections::BTreeSet;

use thiserror::Error;

pub use ast::{CharClass, Element, GrammarAst, RepeatKind, Rule, Sequence};
pub use compile::{compile, CompiledGrammar, RuleId};
pub use mask::TokenMask;
pub use parse::parse_gbnf;
pub use recognizer::{ConstraintState, MAX_STACK_DEPTH};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("rule `{name}` referenced from `{referenced_from}` is not defined")]
    UndefinedRule {
        name: String,
        referenced_from: String,
    },
    #[error("grammar has no `root` rule")]
    MissingRoot,
    #[error("character range {lo:?}-{hi:?} is reversed")]
    InvalidRange { lo: char, hi: char },
    #[error("rule `{rule}` is left-recursive")]
    LeftRecursion { rule: String },
    #[error("no `root` rule to start recognition from")]
    UnreachableRoot,
    #[error("pushdown depth exceeded {limit}")]
    DepthExceeded { limit: usize },
    #[error("state is rejected; no token can follow")]
    RejectedState,
    #[error("language enumeration needs a finite alphabet; a class admits {width} scalars")]
    UnboundedAlphabet { width: String },
}

/// Parses and compiles in one go.
pub fn compile_gbnf(text: &str) -> Result<CompiledGrammar, GrammarError> {
    compile(&parse_gbnf(text)?)
}

/// Widest class [`CompiledGrammar::language_up_to`] will expand.
const MAX_ENUM_CLASS_WIDTH: u64 = 4096;

impl CompiledGrammar {
    /// Every sentence of the grammar with at most `max_len` scalars, sorted.
    ///
    /// Walks the recognizer itself, branching on the scalars admitted by the
    /// classes at the top of the live stacks. Negated or very wide classes
    /// make the walk unbounded and are refused.
    pub fn language_up_to(&self, max_len: usize) -> Result<BTreeSet<String>, GrammarError> {
        let mut out = BTreeSet::new();
        let mut buf = String::new();
        let s0 = self.initial_state()?;
        self.enumerate(&s0, max_len, &mut buf, &mut out)?;
        Ok(out)
    }

    fn enumerate(
        &self,
        state: &ConstraintState,
        budget: usize,
        buf: &mut String,
        out: &mut BTreeSet<String>,
    ) -> Result<(), GrammarError> {
        if state.is_terminable() {
            out.insert(buf.clone());
        }
        if budget == 0 {
            return Ok(());
        }
        let mut candidates = BTreeSet::new();
        for class in self.next_classes(state) {
            match class.positive_width() {
                Some(w) if w <= MAX_ENUM_CLASS_WIDTH => {
                    for &(lo, hi) in &class.ranges {
                        candidates.extend((lo..=hi).filter(|c| class.matches(*c)));
                    }
                }
                Some(w) => return Err(GrammarError::UnboundedAlphabet { width: w.to_string() }),
                None => {
                    return Err(GrammarError::UnboundedAlphabet {
                        width: "all".to_string(),
                    })
                }
            }
        }
        for c in candidates {
            let next = self.advance_char(state, c)?;
            if next.is_rejected() {
                continue;
            }
            buf.push(c);
            self.enumerate(&next, budget - 1, buf, out)?;
            buf.pop();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stsb_language_is_exactly_hundredths() {
        let g = compile_gbnf("root ::= response\nresponse ::= \"0.\"[0-9][0-9]").unwrap();
        let lang = g.language_up_to(6).unwrap();
        let expected: BTreeSet<String> = (0..100).map(|i| format!("0.{i:02}")).collect();
        assert_eq!(lang, expected);
    }

    #[test]
    fn negated_class_refused() {
        let g = compile_gbnf("root ::= [^a]").unwrap();
        assert!(matches!(
            g.language_up_to(1),
            Err(GrammarError::UnboundedAlphabet { .. })
        ));
    }
}
