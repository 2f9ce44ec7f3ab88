//! Nondeterministic finite automata over the alphabet {0, 1}.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NfaError {
    #[error("unknown NFA state `{0}`")]
    UnknownState(String),
    #[error("NFA has no initial state")]
    NoInitial,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    names: Vec<String>,
    by_name: HashMap<String, usize>,
    trans: Vec<(usize, bool, usize)>,
    init: usize,
    finals: FixedBitSet,
}

impl Nfa {
    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn state(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn initial(&self) -> usize {
        self.init
    }

    pub fn is_final(&self, s: usize) -> bool {
        self.finals.contains(s)
    }

    /// Transitions `(src, bit, dst)` in insertion order, without duplicates.
    pub fn transitions(&self) -> &[(usize, bool, usize)] {
        &self.trans
    }

    pub fn accepts(&self, word: &[bool]) -> bool {
        let n = self.names.len();
        let mut cur = FixedBitSet::with_capacity(n);
        cur.insert(self.init);
        for &b in word {
            let mut next = FixedBitSet::with_capacity(n);
            for &(s, bit, t) in &self.trans {
                if bit == b && cur.contains(s) {
                    next.insert(t);
                }
            }
            cur = next;
        }
        cur.intersection(&self.finals).next().is_some()
    }
}

pub fn nfa_accepts(a: &Nfa, word: &[bool]) -> bool {
    a.accepts(word)
}

#[derive(Debug, Clone, Default)]
pub struct NfaBuilder {
    names: Vec<String>,
    by_name: HashMap<String, usize>,
    trans: Vec<(usize, bool, usize)>,
    init: Option<usize>,
    finals: Vec<usize>,
}

impl NfaBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&mut self, name: &str) -> usize {
        if let Some(&s) = self.by_name.get(name) {
            return s;
        }
        self.names.push(name.to_string());
        self.by_name.insert(name.to_string(), self.names.len() - 1);
        self.names.len() - 1
    }

    pub fn lookup(&self, name: &str) -> Result<usize, NfaError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| NfaError::UnknownState(name.to_string()))
    }

    pub fn initial(&mut self, s: usize) -> &mut Self {
        self.init = Some(s);
        self
    }

    pub fn accepting(&mut self, s: usize) -> &mut Self {
        self.finals.push(s);
        self
    }

    pub fn transition(&mut self, src: usize, bit: bool, dst: usize) -> &mut Self {
        if !self.trans.contains(&(src, bit, dst)) {
            self.trans.push((src, bit, dst));
        }
        self
    }

    pub fn build(self) -> Result<Nfa, NfaError> {
        let init = self.init.ok_or(NfaError::NoInitial)?;
        let mut finals = FixedBitSet::with_capacity(self.names.len());
        for s in self.finals {
            finals.insert(s);
        }
        Ok(Nfa {
            names: self.names,
            by_name: self.by_name,
            trans: self.trans,
            init,
            finals,
        })
    }
}
