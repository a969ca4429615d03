//! Second-order character Markov sources for building synthetic name and
//! non-name token lists with known generating probabilities.
//!
//! Each source has a dense transition table indexed by the previous two
//! symbols (BOS-padded at token start) with an explicit end event. Lengths are
//! bounded: the end event is suppressed below `min_len` (its mass is
//! renormalized away) and forced at `max_len`. Because the bounds make the
//! support finite, [`bayes_f1`] can enumerate it exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{BioTag, LabeledCorpus, TokenList};

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovSource {
    alphabet: Vec<char>,
    /// `(A+1)^2` rows of `A+1` entries; column `A` is the end event, symbol
    /// `A` in a state is BOS.
    table: Vec<f64>,
    min_len: usize,
    max_len: usize,
}

impl MarkovSource {
    /// Random sparse source: every state continues with `successors` distinct
    /// characters chosen at random, and ends with probability drawn from
    /// `end_range`.
    pub fn random(
        alphabet: &[char],
        successors: usize,
        end_range: (f64, f64),
        (min_len, max_len): (usize, usize),
        seed: u64,
    ) -> Self {
        assert!(!alphabet.is_empty() && successors >= 1 && successors <= alphabet.len());
        assert!(1 <= min_len && min_len <= max_len);
        let a = alphabet.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut table = vec![0.0; (a + 1) * (a + 1) * (a + 1)];
        for state in 0..(a + 1) * (a + 1) {
            let row = &mut table[state * (a + 1)..(state + 1) * (a + 1)];
            let p_end = rng.gen_range(end_range.0..=end_range.1);
            let picks = rand::seq::index::sample(&mut rng, a, successors);
            let weights: Vec<f64> = (0..successors).map(|_| rng.gen_range(0.2..1.0)).collect();
            let total: f64 = weights.iter().sum();
            for (c, w) in picks.iter().zip(&weights) {
                row[c] = (1.0 - p_end) * w / total;
            }
            row[a] = p_end;
        }
        Self {
            alphabet: alphabet.to_vec(),
            table,
            min_len,
            max_len,
        }
    }

    /// `(1 - weight) * self + weight * other`, row by row. Both sources must
    /// share an alphabet; length bounds come from `self`.
    pub fn mix(&self, other: &MarkovSource, weight: f64) -> Self {
        assert_eq!(self.alphabet, other.alphabet, "mixed sources need one alphabet");
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(x, y)| (1.0 - weight) * x + weight * y)
            .collect();
        Self { table, ..self.clone() }
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    fn bos(&self) -> usize {
        self.alphabet.len()
    }

    fn row(&self, prev2: usize, prev1: usize) -> &[f64] {
        let w = self.alphabet.len() + 1;
        let state = prev2 * w + prev1;
        &self.table[state * w..(state + 1) * w]
    }

    /// Conditional distribution of the next symbol (index `A` = end) after
    /// `len` characters.
    fn step(&self, prev2: usize, prev1: usize, len: usize, out: &mut Vec<f64>) {
        let a = self.alphabet.len();
        out.clear();
        if len >= self.max_len {
            out.resize(a + 1, 0.0);
            out[a] = 1.0;
            return;
        }
        out.extend_from_slice(self.row(prev2, prev1));
        if len < self.min_len {
            let keep = 1.0 - out[a];
            out[a] = 0.0;
            for p in &mut out[..a] {
                *p /= keep;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let a = self.alphabet.len();
        let (mut p2, mut p1) = (self.bos(), self.bos());
        let mut token = String::new();
        let mut dist = Vec::with_capacity(a + 1);
        for len in 0.. {
            self.step(p2, p1, len, &mut dist);
            let mut u: f64 = rng.gen();
            let mut next = a;
            for (i, &p) in dist.iter().enumerate() {
                if p > 0.0 {
                    next = i;
                    if u < p {
                        break;
                    }
                    u -= p;
                }
            }
            if next == a {
                break;
            }
            token.push(self.alphabet[next]);
            (p2, p1) = (p1, next);
        }
        token
    }

    pub fn sample_many(&self, n: usize, seed: u64) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }

    /// Exact generating probability of `token`.
    pub fn prob(&self, token: &str) -> f64 {
        let a = self.alphabet.len();
        let (mut p2, mut p1) = (self.bos(), self.bos());
        let mut prob = 1.0;
        let mut dist = Vec::with_capacity(a + 1);
        let mut len = 0;
        for c in token.chars() {
            let Some(i) = self.alphabet.iter().position(|&x| x == c) else {
                return 0.0;
            };
            self.step(p2, p1, len, &mut dist);
            prob *= dist[i];
            (p2, p1) = (p1, i);
            len += 1;
        }
        self.step(p2, p1, len, &mut dist);
        prob * dist[a]
    }
}

/// F1 (positive class = `positive`) of the maximum-a-posteriori classifier
/// between two sources, by exhaustive enumeration of every token either source
/// can emit. `prior_positive` is the share of positive tokens.
pub fn bayes_f1(positive: &MarkovSource, negative: &MarkovSource, prior_positive: f64) -> f64 {
    assert_eq!(positive.alphabet, negative.alphabet);
    struct Acc {
        tp: f64,
        fp: f64,
        fn_: f64,
    }
    fn walk(
        pos: &MarkovSource,
        neg: &MarkovSource,
        prior: f64,
        state: (usize, usize, usize),
        mass: (f64, f64),
        acc: &mut Acc,
    ) {
        let (p2, p1, len) = state;
        let a = pos.alphabet.len();
        let (mut dp, mut dn) = (Vec::new(), Vec::new());
        pos.step(p2, p1, len, &mut dp);
        neg.step(p2, p1, len, &mut dn);
        for next in 0..=a {
            let m = (mass.0 * dp[next], mass.1 * dn[next]);
            if m.0 == 0.0 && m.1 == 0.0 {
                continue;
            }
            if next == a {
                let (wp, wn) = (prior * m.0, (1.0 - prior) * m.1);
                if wp > wn {
                    acc.tp += wp;
                    acc.fp += wn;
                } else {
                    acc.fn_ += wp;
                }
            } else {
                walk(pos, neg, prior, (p1, next, len + 1), m, acc);
            }
        }
    }
    let mut acc = Acc {
        tp: 0.0,
        fp: 0.0,
        fn_: 0.0,
    };
    let bos = positive.bos();
    walk(positive, negative, prior_positive, (bos, bos, 0), (1.0, 1.0), &mut acc);
    2.0 * acc.tp / (2.0 * acc.tp + acc.fp + acc.fn_)
}

/// Two sources producing name-like and ordinary tokens.
#[derive(Debug, Clone)]
pub struct TwoSourceCorpus {
    pub names: MarkovSource,
    pub others: MarkovSource,
}

impl TwoSourceCorpus {
    /// Name and non-name sources over a shared lowercase alphabet; `overlap`
    /// mixes each source's table with the other's.
    pub fn new(overlap: f64, seed: u64) -> Self {
        let alphabet: Vec<char> = "aeiklmnorstu".chars().collect();
        let lens = (2, 8);
        let names = MarkovSource::random(&alphabet, 3, (0.1, 0.3), lens, seed);
        let others = MarkovSource::random(&alphabet, 3, (0.1, 0.3), lens, seed.wrapping_add(1));
        Self {
            names: names.mix(&others, overlap),
            others: others.mix(&names, overlap),
        }
    }

    pub fn token_lists(&self, per_class: usize, seed: u64) -> (TokenList, TokenList) {
        (
            TokenList::new(self.names.sample_many(per_class, seed), "names"),
            TokenList::new(self.others.sample_many(per_class, seed.wrapping_add(7)), "others"),
        )
    }

    /// A BIO corpus whose sentences interleave names (tagged `B-PER`) and
    /// ordinary tokens (`O`) in random order: `per_class` of each in total.
    pub fn labeled_corpus(&self, per_class: usize, sentence_len: usize, seed: u64) -> LabeledCorpus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut items: Vec<(String, BioTag)> = Vec::with_capacity(2 * per_class);
        for _ in 0..per_class {
            items.push((self.names.sample(&mut rng), BioTag::begin("PER")));
            items.push((self.others.sample(&mut rng), BioTag::outside()));
        }
        // Fisher-Yates with the same generator keeps everything reproducible.
        for i in (1..items.len()).rev() {
            let j = rng.gen_range(0..=i);
            items.swap(i, j);
        }
        let sentences: Vec<Vec<(String, BioTag)>> = items.chunks(sentence_len.max(1)).map(|c| c.to_vec()).collect();
        LabeledCorpus::from_sentences(sentences)
    }
}
