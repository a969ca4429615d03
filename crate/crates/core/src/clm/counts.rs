use std::collections::{BTreeMap, HashMap};

use super::vocab::{CharVocab, Symbol};
use crate::corpus::TokenList;
use crate::error::{Error, Result};

/// Continuation counts after one history.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HistoryCounts {
    next: BTreeMap<Symbol, u64>,
    total: u64,
}

impl HistoryCounts {
    /// c(h)
    pub fn total(&self) -> u64 {
        self.total
    }

    /// T(h): number of distinct continuations.
    pub fn distinct(&self) -> u64 {
        self.next.len() as u64
    }

    pub fn count(&self, w: Symbol) -> u64 {
        self.next.get(&w).copied().unwrap_or(0)
    }

    pub fn continuations(&self) -> impl Iterator<Item = (Symbol, u64)> + '_ {
        self.next.iter().map(|(&w, &c)| (w, c))
    }

    fn add(&mut self, w: Symbol, by: u64) {
        *self.next.entry(w).or_default() += by;
        self.total += by;
    }
}

/// Counts of every (history, next) event for history lengths `0..order`.
#[derive(Debug, Clone)]
pub struct NgramCounts {
    order: usize,
    vocab: CharVocab,
    histories: HashMap<Box<[Symbol]>, HistoryCounts>,
}

impl NgramCounts {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &CharVocab {
        &self.vocab
    }

    pub fn history(&self, h: &[Symbol]) -> Option<&HistoryCounts> {
        self.histories.get(h)
    }

    pub fn count(&self, h: &[Symbol], w: Symbol) -> u64 {
        self.history(h).map_or(0, |hc| hc.count(w))
    }

    pub fn total(&self, h: &[Symbol]) -> u64 {
        self.history(h).map_or(0, HistoryCounts::total)
    }

    pub fn distinct(&self, h: &[Symbol]) -> u64 {
        self.history(h).map_or(0, HistoryCounts::distinct)
    }

    /// Number of predicted events (characters plus EOS) in the training data.
    pub fn num_events(&self) -> u64 {
        self.total(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.num_events() == 0
    }

    /// All observed histories, in no particular order.
    pub fn histories(&self) -> impl Iterator<Item = (&[Symbol], &HistoryCounts)> {
        self.histories.iter().map(|(h, c)| (&**h, c))
    }

    /// Observed histories of one length, sorted.
    pub fn histories_of_len(&self, len: usize) -> Vec<(&[Symbol], &HistoryCounts)> {
        let mut v: Vec<_> = self.histories().filter(|(h, _)| h.len() == len).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    fn add_token(&mut self, symbols: &[Symbol], multiplicity: u64) {
        let pad = self.order - 1;
        let mut seq = Vec::with_capacity(pad + symbols.len() + 1);
        seq.resize(pad, Symbol::BOS);
        seq.extend_from_slice(symbols);
        seq.push(Symbol::EOS);
        for i in pad..seq.len() {
            let w = seq[i];
            for len in 0..self.order {
                let h = &seq[i - len..i];
                match self.histories.get_mut(h) {
                    Some(hc) => hc.add(w, multiplicity),
                    None => {
                        let mut hc = HistoryCounts::default();
                        hc.add(w, multiplicity);
                        self.histories.insert(h.into(), hc);
                    }
                }
            }
        }
    }
}

/// Counts every token as the sequence `BOS^(order-1) c1 .. ck EOS`, crediting
/// each predicted event to all history lengths `0..order`.
pub fn count_ngrams(tokens: &TokenList, order: usize) -> Result<NgramCounts> {
    if order < 1 {
        return Err(Error::InvalidOrder(order));
    }
    let vocab = CharVocab::from_tokens(tokens.iter());
    let mut counts = NgramCounts {
        order,
        vocab,
        histories: HashMap::new(),
    };

    // Identical tokens produce identical events; count each type once.
    let mut types: HashMap<&str, u64> = HashMap::new();
    for t in tokens.iter() {
        *types.entry(t).or_default() += 1;
    }
    let mut types: Vec<_> = types.into_iter().collect();
    types.sort_unstable();
    for (token, n) in types {
        let symbols = counts.vocab.encode(token);
        counts.add_token(&symbols, n);
    }
    Ok(counts)
}
