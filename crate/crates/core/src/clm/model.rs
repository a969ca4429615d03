use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::counts::NgramCounts;
use super::vocab::{CharVocab, Symbol};
use crate::error::{Error, Result};

/// A probability or weight kept in both linear and log10 form, so that a
/// value read from a file is written back unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Weight {
    pub linear: f64,
    pub log10: f64,
}

impl Weight {
    pub fn from_linear(linear: f64) -> Self {
        Self {
            linear,
            log10: linear.log10(),
        }
    }

    pub fn from_log10(log10: f64) -> Self {
        Self {
            linear: 10f64.powf(log10),
            log10,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct NgramEntry {
    /// P(w | h) for the gram `h w`. Absent for grams ending in BOS, which
    /// exist only to carry a backoff weight.
    pub prob: Option<Weight>,
    /// Backoff weight when this gram is used as a history.
    pub bow: Option<Weight>,
}

/// Immutable interpolated Witten-Bell character model, stored in backoff
/// form: explicit probabilities for observed grams plus a backoff weight per
/// observed history.
#[derive(Debug, Clone)]
pub struct CharLm {
    order: usize,
    vocab: CharVocab,
    entries: HashMap<Box<[Symbol]>, NgramEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenScore {
    pub log10_prob: f64,
    /// Characters plus the end event.
    pub num_events: usize,
    pub perplexity: f64,
}

/// Estimates interpolated Witten-Bell probabilities:
///
/// ```text
/// lambda(h) = c(h) / (c(h) + T(h))
/// P(w | h)  = lambda(h) * c(h, w) / c(h) + (1 - lambda(h)) * P(w | h')
/// ```
///
/// where `h'` drops the oldest symbol and the empty history interpolates with
/// a uniform distribution over surface characters, EOS and UNK.
pub fn estimate(counts: &NgramCounts) -> Result<CharLm> {
    if counts.is_empty() {
        return Err(Error::EmptyCounts);
    }
    let mut lm = CharLm {
        order: counts.order(),
        vocab: counts.vocab().clone(),
        entries: HashMap::new(),
    };
    let base = lm.base_probability();

    for len in 0..lm.order {
        let mut probs: Vec<(Vec<Symbol>, f64)> = Vec::new();
        let mut bows: Vec<(&[Symbol], f64)> = Vec::new();
        for (h, hc) in counts.histories_of_len(len) {
            let c = hc.total() as f64;
            let lambda = c / (c + hc.distinct() as f64);
            let mut gram: Vec<Symbol> = h.to_vec();
            gram.push(Symbol::BOS);
            for (w, n) in hc.continuations() {
                *gram.last_mut().unwrap() = w;
                let lower = if len == 0 { base } else { lm.prob_window(&gram[1..]) };
                probs.push((gram.clone(), lambda * n as f64 / c + (1.0 - lambda) * lower));
            }
            if len == 0 {
                // UNK never occurs in training; it only receives the
                // interpolated share of the base distribution.
                probs.push((vec![Symbol::UNK], (1.0 - lambda) * base));
            } else {
                bows.push((h, 1.0 - lambda));
            }
        }
        for (gram, p) in probs {
            lm.entries.entry(gram.into()).or_default().prob = Some(Weight::from_linear(p));
        }
        for (h, b) in bows {
            lm.entries.entry(h.into()).or_default().bow = Some(Weight::from_linear(b));
        }
    }
    Ok(lm)
}

impl CharLm {
    pub(crate) fn from_parts(order: usize, vocab: CharVocab, entries: HashMap<Box<[Symbol]>, NgramEntry>) -> Self {
        Self { order, vocab, entries }
    }

    pub(crate) fn entries(&self) -> &HashMap<Box<[Symbol]>, NgramEntry> {
        &self.entries
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &CharVocab {
        &self.vocab
    }

    /// Uniform probability of the base distribution.
    pub fn base_probability(&self) -> f64 {
        1.0 / self.vocab.predicted_alphabet_size() as f64
    }

    /// Histories that carry a backoff weight, i.e. were observed in training.
    /// The empty history is not included.
    pub fn observed_histories(&self) -> impl Iterator<Item = &[Symbol]> {
        self.entries.iter().filter(|(_, e)| e.bow.is_some()).map(|(h, _)| &**h)
    }

    /// Backoff weight of a history; 1 for unobserved histories.
    pub fn backoff_weight(&self, history: &[Symbol]) -> f64 {
        self.entries.get(history).and_then(|e| e.bow).map_or(1.0, |w| w.linear)
    }

    /// Backoff-resolved P(next | history). Only the last `order - 1` symbols
    /// of `history` are used. Returns 0 for BOS, which is never predicted.
    pub fn prob(&self, history: &[Symbol], next: Symbol) -> f64 {
        let keep = history.len().min(self.order - 1);
        let mut window = Vec::with_capacity(keep + 1);
        window.extend_from_slice(&history[history.len() - keep..]);
        window.push(next);
        self.prob_window(&window)
    }

    /// `window` is a history followed by the predicted symbol.
    fn prob_window(&self, window: &[Symbol]) -> f64 {
        let last = window.len() - 1;
        let mut scale = 1.0;
        for start in 0..=last {
            if let Some(p) = self.entries.get(&window[start..]).and_then(|e| e.prob) {
                return scale * p.linear;
            }
            if start < last {
                scale *= self.backoff_weight(&window[start..last]);
            }
        }
        0.0
    }

    pub fn score(&self, token: &str) -> Result<TokenScore> {
        if token.is_empty() {
            return Err(Error::EmptyToken);
        }
        let pad = self.order - 1;
        let mut seq = vec![Symbol::BOS; pad];
        seq.extend(token.chars().map(|c| self.vocab.symbol(c)));
        seq.push(Symbol::EOS);

        let mut log10_prob = 0.0;
        for i in pad..seq.len() {
            log10_prob += self.prob_window(&seq[i - pad..=i]).log10();
        }
        let num_events = seq.len() - pad;
        Ok(TokenScore {
            log10_prob,
            num_events,
            perplexity: 10f64.powf(-log10_prob / num_events as f64),
        })
    }

    pub fn perplexity(&self, token: &str) -> Result<f64> {
        self.score(token).map(|s| s.perplexity)
    }

    /// Scores tokens in parallel; output order matches input order.
    pub fn score_batch<S: AsRef<str> + Sync>(&self, tokens: &[S]) -> Result<Vec<TokenScore>> {
        tokens.par_iter().map(|t| self.score(t.as_ref())).collect()
    }
}
