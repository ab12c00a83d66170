use super::compile::CompiledGrammar;
use super::recognizer::ConstraintState;
use super::GrammarError;
use crate::vocab::{TokenTrie, Vocabulary};

/// Allowed-token bitset for one decoding step, plus the end-of-sequence flag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenMask {
    bits: Vec<u64>,
    len: usize,
    eos_allowed: bool,
}

impl TokenMask {
    pub fn empty(len: usize) -> Self {
        TokenMask {
            bits: vec![0; len.div_ceil(64)],
            len,
            eos_allowed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, id: u32) {
        let i = id as usize;
        assert!(i < self.len, "token id {id} out of range");
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn is_allowed(&self, id: u32) -> bool {
        let i = id as usize;
        i < self.len && self.bits[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn eos_allowed(&self) -> bool {
        self.eos_allowed
    }

    pub fn set_eos_allowed(&mut self, allowed: bool) {
        self.eos_allowed = allowed;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn allowed_ids(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.len as u32).filter(|&i| self.is_allowed(i))
    }

    /// Packed words, least significant bit first.
    pub fn words(&self) -> &[u64] {
        &self.bits
    }
}

impl CompiledGrammar {
    /// Tokens whose decoded text keeps `state` alive. Special tokens and
    /// tokens that are not valid UTF-8 are never allowed.
    pub fn allowed_tokens(
        &self,
        state: &ConstraintState,
        vocab: &Vocabulary,
    ) -> Result<TokenMask, GrammarError> {
        self.allowed_tokens_in(state, vocab.trie(), vocab.len())
    }

    /// Same as [`Self::allowed_tokens`] against a prebuilt prefix tree.
    pub fn allowed_tokens_in(
        &self,
        state: &ConstraintState,
        trie: &TokenTrie,
        vocab_len: usize,
    ) -> Result<TokenMask, GrammarError> {
        if state.is_rejected() {
            return Err(GrammarError::RejectedState);
        }
        let mut mask = TokenMask::empty(vocab_len);
        mask.eos_allowed = state.is_terminable();
        self.walk(trie, TokenTrie::ROOT, state.stacks(), &mut mask)?;
        Ok(mask)
    }

    fn walk(
        &self,
        trie: &TokenTrie,
        node: u32,
        stacks: &[Vec<u32>],
        mask: &mut TokenMask,
    ) -> Result<(), GrammarError> {
        for &id in trie.tokens_at(node) {
            mask.set(id);
        }
        for &(c, child) in trie.children(node) {
            let next = self.step(stacks, c)?;
            if !next.is_empty() {
                self.walk(trie, child, &next, mask)?;
            }
        }
        Ok(())
    }
}
