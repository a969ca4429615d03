//! Direct interpolated Witten-Bell recursion over raw token strings.
//!
//! Counts are recomputed by scanning every padded token for each query and
//! nothing is memoized. Slow by construction; only for small fixtures.

#![allow(dead_code)]

use nameid_core::{CharLm, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    Bos,
    Eos,
    Unk,
    Ch(char),
}

pub struct WbOracle {
    order: usize,
    /// Padded event sequences: BOS^(order-1) chars EOS.
    seqs: Vec<Vec<Sym>>,
    /// Surface characters plus EOS and UNK.
    alphabet: Vec<Sym>,
}

impl WbOracle {
    pub fn new(tokens: &[String], order: usize) -> Self {
        let mut chars: Vec<char> = tokens.iter().flat_map(|t| t.chars()).collect();
        chars.sort();
        chars.dedup();
        let mut alphabet: Vec<Sym> = chars.into_iter().map(Sym::Ch).collect();
        alphabet.push(Sym::Eos);
        alphabet.push(Sym::Unk);
        let seqs = tokens
            .iter()
            .map(|t| {
                let mut s = vec![Sym::Bos; order - 1];
                s.extend(t.chars().map(Sym::Ch));
                s.push(Sym::Eos);
                s
            })
            .collect();
        Self { order, seqs, alphabet }
    }

    pub fn alphabet(&self) -> &[Sym] {
        &self.alphabet
    }

    pub fn count(&self, h: &[Sym], w: Sym) -> u64 {
        let pad = self.order - 1;
        let mut n = 0;
        for s in &self.seqs {
            for i in pad..s.len() {
                if s[i] == w && i >= h.len() && &s[i - h.len()..i] == h {
                    n += 1;
                }
            }
        }
        n
    }

    pub fn total(&self, h: &[Sym]) -> u64 {
        self.alphabet.iter().map(|&w| self.count(h, w)).sum()
    }

    pub fn distinct(&self, h: &[Sym]) -> u64 {
        self.alphabet.iter().filter(|&&w| self.count(h, w) > 0).count() as u64
    }

    /// P(w | h) with `h` already at most `order - 1` long.
    pub fn prob(&self, h: &[Sym], w: Sym) -> f64 {
        let lower = if h.is_empty() {
            1.0 / self.alphabet.len() as f64
        } else {
            self.prob(&h[1..], w)
        };
        let c = self.total(h);
        if c == 0 {
            return lower;
        }
        let lambda = c as f64 / (c + self.distinct(h)) as f64;
        lambda * self.count(h, w) as f64 / c as f64 + (1.0 - lambda) * lower
    }

    /// Every history of length `0..order` that occurs before some event.
    pub fn observed_histories(&self) -> Vec<Vec<Sym>> {
        let pad = self.order - 1;
        let mut out = Vec::new();
        for s in &self.seqs {
            for i in pad..s.len() {
                for len in 0..self.order {
                    out.push(s[i - len..i].to_vec());
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

pub fn to_symbol(lm: &CharLm, s: Sym) -> Symbol {
    match s {
        Sym::Bos => Symbol::BOS,
        Sym::Eos => Symbol::EOS,
        Sym::Unk => Symbol::UNK,
        Sym::Ch(c) => lm.vocab().lookup(c).expect("oracle char missing from model vocab"),
    }
}

pub fn to_symbols(lm: &CharLm, h: &[Sym]) -> Vec<Symbol> {
    h.iter().map(|&s| to_symbol(lm, s)).collect()
}

/// Largest |model - oracle| over every observed history (plus the empty one)
/// crossed with the full predicted alphabet, and over `extra` histories.
pub fn max_deviation(lm: &CharLm, oracle: &WbOracle, extra: &[Vec<Sym>]) -> f64 {
    let mut worst: f64 = 0.0;
    let mut hs = oracle.observed_histories();
    hs.extend(extra.iter().cloned());
    for h in &hs {
        let hsym = to_symbols(lm, h);
        for &w in oracle.alphabet() {
            let got = lm.prob(&hsym, to_symbol(lm, w));
            let want = oracle.prob(h, w);
            worst = worst.max((got - want).abs());
        }
    }
    worst
}
