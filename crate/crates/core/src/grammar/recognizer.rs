//! Stack-set recognition.
//!
//! A state is a set of pushdown stacks. Every stack is kept normalised: its
//! top frame points at a character class, or the stack is empty, meaning
//! the input may end here. Expansion of rule references happens eagerly
//! after each consumed scalar.

use std::sync::Arc;

use super::compile::{CompiledGrammar, Symbol};
use super::GrammarError;

/// Hard cap on pushdown depth.
pub const MAX_STACK_DEPTH: usize = 1024;

type Stack = Vec<u32>;

/// Recognizer position after consuming a prefix. Cloning is a refcount bump.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConstraintState {
    stacks: Arc<[Stack]>,
    consumed: usize,
}

impl ConstraintState {
    /// No derivation survives.
    pub fn is_rejected(&self) -> bool {
        self.stacks.is_empty()
    }

    /// The consumed prefix is a complete sentence.
    pub fn is_terminable(&self) -> bool {
        self.stacks.iter().any(|s| s.is_empty())
    }

    /// Number of scalars consumed since the initial state.
    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn stack_count(&self) -> usize {
        self.stacks.len()
    }

    pub(crate) fn stacks(&self) -> &[Stack] {
        &self.stacks
    }

    pub(crate) fn from_stacks(stacks: Vec<Stack>, consumed: usize) -> Self {
        ConstraintState {
            stacks: stacks.into(),
            consumed,
        }
    }
}

impl CompiledGrammar {
    pub fn initial_state(&self) -> Result<ConstraintState, GrammarError> {
        let mut out = Vec::new();
        for &start in &self.rule_alts[self.root() as usize] {
            self.expand(vec![start], &mut out)?;
        }
        normalise(&mut out);
        Ok(ConstraintState::from_stacks(out, 0))
    }

    /// Pushes the normalised stacks reachable from `stack` without
    /// consuming input.
    fn expand(&self, stack: Stack, out: &mut Vec<Stack>) -> Result<(), GrammarError> {
        let mut work = vec![stack];
        while let Some(mut stack) = work.pop() {
            let Some(&top) = stack.last() else {
                out.push(stack);
                continue;
            };
            match &self.symbols[top as usize] {
                Symbol::Char(_) => out.push(stack),
                Symbol::End => {
                    stack.pop();
                    work.push(stack);
                }
                Symbol::Rule(rule) => {
                    stack.pop();
                    let next = top + 1;
                    // Tail position: nothing left in this frame.
                    if self.symbols[next as usize] != Symbol::End {
                        stack.push(next);
                    }
                    if stack.len() + 1 > MAX_STACK_DEPTH {
                        return Err(GrammarError::DepthExceeded {
                            limit: MAX_STACK_DEPTH,
                        });
                    }
                    for &alt in &self.rule_alts[*rule as usize] {
                        let mut s = stack.clone();
                        s.push(alt);
                        work.push(s);
                    }
                }
            }
        }
        Ok(())
    }

    /// Advances every stack over one scalar. Stacks are returned unnormalised
    /// with respect to duplicates.
    pub(crate) fn step(&self, stacks: &[Stack], c: char) -> Result<Vec<Stack>, GrammarError> {
        let mut out = Vec::new();
        for stack in stacks {
            let Some(&top) = stack.last() else { continue };
            if let Symbol::Char(class) = &self.symbols[top as usize] {
                if class.matches(c) {
                    let mut s = stack.clone();
                    *s.last_mut().unwrap() = top + 1;
                    self.expand(s, &mut out)?;
                }
            }
        }
        normalise(&mut out);
        Ok(out)
    }

    pub fn advance_char(
        &self,
        state: &ConstraintState,
        c: char,
    ) -> Result<ConstraintState, GrammarError> {
        let stacks = self.step(state.stacks(), c)?;
        Ok(ConstraintState::from_stacks(stacks, state.consumed + 1))
    }

    /// Folds [`Self::advance_char`] over `text`. A rejected state absorbs.
    pub fn advance_text(
        &self,
        state: &ConstraintState,
        text: &str,
    ) -> Result<ConstraintState, GrammarError> {
        let mut stacks: Vec<Stack> = state.stacks().to_vec();
        let mut consumed = state.consumed;
        if text.is_empty() {
            return Ok(state.clone());
        }
        for c in text.chars() {
            consumed += 1;
            if !stacks.is_empty() {
                stacks = self.step(&stacks, c)?;
            }
        }
        Ok(ConstraintState::from_stacks(stacks, consumed))
    }

    /// True when `text` is a complete sentence of the grammar.
    pub fn validate_output(&self, text: &str) -> bool {
        self.initial_state()
            .and_then(|s| self.advance_text(&s, text))
            .map(|s| s.is_terminable())
            .unwrap_or(false)
    }

    /// Character classes that may match the next scalar.
    pub fn next_classes(&self, state: &ConstraintState) -> Vec<&super::CharClass> {
        let mut out: Vec<&super::CharClass> = state
            .stacks()
            .iter()
            .filter_map(|s| s.last())
            .filter_map(|&top| match &self.symbols[top as usize] {
                Symbol::Char(c) => Some(c),
                _ => None,
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

fn normalise(stacks: &mut Vec<Stack>) {
    stacks.sort_unstable();
    stacks.dedup();
}
