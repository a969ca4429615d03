//! Token-level name identification from an entity model and a non-entity
//! model, plus the exact-match and capitalization baselines.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clm::CharLm;
use crate::corpus::{LabeledCorpus, TokenList};
use crate::error::{Error, Result};
use crate::evaluation::Confusion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenLabel {
    Entity,
    NonEntity,
}

impl TokenLabel {
    pub fn is_entity(self) -> bool {
        self == TokenLabel::Entity
    }
}

impl fmt::Display for TokenLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenLabel::Entity => "ENTITY",
            TokenLabel::NonEntity => "NON_ENTITY",
        })
    }
}

impl FromStr for TokenLabel {
    type Err = String;

    /// Accepts our own spelling, `1`/`0`, and BIO tags (B-/I- as entity, O as
    /// non-entity) so predictions of external taggers can be evaluated.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ENTITY" | "E" | "1" => Ok(TokenLabel::Entity),
            "NON_ENTITY" | "O" | "0" => Ok(TokenLabel::NonEntity),
            _ if s.starts_with("B-") || s.starts_with("I-") || s == "B" || s == "I" => Ok(TokenLabel::Entity),
            _ => Err(format!("unrecognized label {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    Length1,
    Threshold,
    Comparison,
    Tie,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Length1 => "LENGTH_1",
            Rule::Threshold => "THRESHOLD",
            Rule::Comparison => "COMPARISON",
            Rule::Tie => "TIE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentifierConfig {
    /// Entity-model perplexity above which a token is a non-entity.
    pub threshold: Option<f64>,
    /// Tokens of one character are non-entities.
    pub min_length_rule: bool,
    pub tie_policy: TokenLabel,
}

impl Default for IdentifierConfig {
    fn default() -> Self {
        Self {
            threshold: None,
            min_length_rule: true,
            tie_policy: TokenLabel::NonEntity,
        }
    }
}

impl IdentifierConfig {
    pub fn validate(&self) -> Result<()> {
        match self.threshold {
            Some(t) if t.is_nan() || t <= 0.0 => {
                Err(Error::InvalidArgument(format!("threshold must be positive, got {t}")))
            }
            // +inf is accepted and behaves like no threshold.
            _ => Ok(()),
        }
    }

    pub fn with_threshold(self, threshold: Option<f64>) -> Self {
        Self { threshold, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub label: TokenLabel,
    pub entity_ppl: f64,
    pub non_entity_ppl: f64,
    pub rule_fired: Rule,
}

/// Applies the decision rules to precomputed perplexities.
///
/// 1. one-character tokens are non-entities when the length rule is on;
/// 2. an entity perplexity above the threshold means non-entity;
/// 3. otherwise the model with the lower perplexity wins.
pub fn decide(config: &IdentifierConfig, char_len: usize, entity_ppl: f64, non_entity_ppl: f64) -> Decision {
    let (label, rule_fired) = if config.min_length_rule && char_len == 1 {
        (TokenLabel::NonEntity, Rule::Length1)
    } else if config.threshold.is_some_and(|t| entity_ppl > t) {
        (TokenLabel::NonEntity, Rule::Threshold)
    } else if entity_ppl < non_entity_ppl {
        (TokenLabel::Entity, Rule::Comparison)
    } else if entity_ppl > non_entity_ppl {
        (TokenLabel::NonEntity, Rule::Comparison)
    } else {
        (config.tie_policy, Rule::Tie)
    };
    Decision {
        label,
        entity_ppl,
        non_entity_ppl,
        rule_fired,
    }
}

/// A pair of trained models.
#[derive(Debug, Clone, Copy)]
pub struct Identifier<'a> {
    pub entity_lm: &'a CharLm,
    pub non_entity_lm: &'a CharLm,
}

/// Both perplexities of one token.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScore {
    pub char_len: usize,
    pub entity_ppl: f64,
    pub non_entity_ppl: f64,
}

impl<'a> Identifier<'a> {
    pub fn new(entity_lm: &'a CharLm, non_entity_lm: &'a CharLm) -> Self {
        Self {
            entity_lm,
            non_entity_lm,
        }
    }

    pub fn score(&self, token: &str) -> Result<PairScore> {
        Ok(PairScore {
            char_len: token.chars().count(),
            entity_ppl: self.entity_lm.perplexity(token)?,
            non_entity_ppl: self.non_entity_lm.perplexity(token)?,
        })
    }

    pub fn score_batch<S: AsRef<str> + Sync>(&self, tokens: &[S]) -> Result<Vec<PairScore>> {
        tokens.par_iter().map(|t| self.score(t.as_ref())).collect()
    }

    pub fn classify(&self, config: &IdentifierConfig, token: &str) -> Result<Decision> {
        let s = self.score(token)?;
        Ok(decide(config, s.char_len, s.entity_ppl, s.non_entity_ppl))
    }

    /// Classifies in parallel; output order matches input order.
    pub fn classify_batch<S: AsRef<str> + Sync>(
        &self,
        config: &IdentifierConfig,
        tokens: &[S],
    ) -> Result<Vec<Decision>> {
        tokens.par_iter().map(|t| self.classify(config, t.as_ref())).collect()
    }

    pub fn classify_corpus(&self, config: &IdentifierConfig, corpus: &LabeledCorpus) -> Result<Vec<Decision>> {
        let tokens: Vec<&str> = corpus.tokens().map(|t| t.token.as_str()).collect();
        self.classify_batch(config, &tokens)
    }

    /// Picks the entity-perplexity threshold that maximizes token F1 on `dev`.
    /// See [`tune_threshold_from_scores`].
    pub fn tune_threshold(&self, dev: &LabeledCorpus, base: &IdentifierConfig) -> Result<TunedThreshold> {
        let tokens: Vec<&str> = dev.tokens().map(|t| t.token.as_str()).collect();
        let gold: Vec<bool> = dev.tokens().map(|t| t.tag.is_entity()).collect();
        let scores = self.score_batch(&tokens)?;
        tune_threshold_from_scores(&scores, &gold, base)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunedThreshold {
    /// `f64::INFINITY` when no finite threshold helps.
    pub threshold: f64,
    pub f1: f64,
}

impl TunedThreshold {
    pub fn as_option(&self) -> Option<f64> {
        self.threshold.is_finite().then_some(self.threshold)
    }
}

/// Threshold search over `{+inf}` and the midpoints between consecutive
/// distinct entity perplexities. F1 is constant between those points, so the
/// candidates reach every achievable value. Ties go to the larger threshold.
pub fn tune_threshold_from_scores(
    scores: &[PairScore],
    gold: &[bool],
    base: &IdentifierConfig,
) -> Result<TunedThreshold> {
    if scores.len() != gold.len() {
        return Err(Error::LengthMismatch {
            expected: gold.len(),
            actual: scores.len(),
        });
    }
    let positives = gold.iter().filter(|&&g| g).count();
    if positives == 0 || positives == gold.len() {
        return Err(Error::DegenerateDev(
            "need at least one entity and one non-entity token".into(),
        ));
    }

    // Without a threshold every token has a fixed label; a threshold can only
    // turn entity predictions with high entity perplexity into non-entity.
    let unthresholded = IdentifierConfig {
        threshold: None,
        ..*base
    };
    let mut base_counts = Confusion::default();
    // (entity_ppl, gold) of tokens predicted ENTITY without a threshold.
    let mut filterable: Vec<(f64, bool)> = Vec::new();
    for (s, &g) in scores.iter().zip(gold) {
        let d = decide(&unthresholded, s.char_len, s.entity_ppl, s.non_entity_ppl);
        base_counts.add(g, d.label.is_entity());
        // Length-1 decisions precede the threshold and cannot change.
        if d.label.is_entity() {
            filterable.push((s.entity_ppl, g));
        }
    }
    filterable.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut ppls: Vec<f64> = scores.iter().map(|s| s.entity_ppl).collect();
    ppls.sort_by(|a, b| b.total_cmp(a));
    ppls.dedup();
    let mut candidates = vec![f64::INFINITY];
    candidates.extend(ppls.windows(2).map(|w| w[1] + (w[0] - w[1]) / 2.0));

    // Walk candidates from large to small, moving filtered tokens from
    // predicted-entity to predicted-non-entity.
    let mut counts = base_counts;
    let mut next = 0;
    let mut best = TunedThreshold {
        threshold: f64::INFINITY,
        f1: counts.f1(),
    };
    for &tau in &candidates {
        while next < filterable.len() && filterable[next].0 > tau {
            counts.retract_entity_prediction(filterable[next].1);
            next += 1;
        }
        let f1 = counts.f1();
        if f1 > best.f1 {
            best = TunedThreshold { threshold: tau, f1 };
        }
    }
    Ok(best)
}

/// Labels a token ENTITY iff it occurs verbatim among the training entities.
#[derive(Debug, Clone)]
pub struct ExactMatch {
    seen: HashSet<String>,
}

impl ExactMatch {
    pub fn new(train_entities: &TokenList) -> Self {
        Self {
            seen: train_entities.iter().map(str::to_owned).collect(),
        }
    }

    pub fn classify(&self, token: &str) -> TokenLabel {
        if self.seen.contains(token) {
            TokenLabel::Entity
        } else {
            TokenLabel::NonEntity
        }
    }
}

pub fn exact_match_classify(train_entities: &TokenList, token: &str) -> TokenLabel {
    if train_entities.iter().any(|t| t == token) {
        TokenLabel::Entity
    } else {
        TokenLabel::NonEntity
    }
}

/// Uppercase (Lu) or titlecase (Lt). Titlecase letters are the ones that
/// change under both lowercase and uppercase mapping.
fn is_upper_or_title(c: char) -> bool {
    if c.is_uppercase() {
        return true;
    }
    let lower_differs = !c.to_lowercase().eq(std::iter::once(c));
    let upper_differs = !c.to_uppercase().eq(std::iter::once(c));
    lower_differs && upper_differs
}

/// ENTITY iff the first character is uppercase or titlecase. Scripts without
/// case never fire.
pub fn capitalization_classify(token: &str) -> TokenLabel {
    match token.chars().next() {
        Some(c) if is_upper_or_title(c) => TokenLabel::Entity,
        _ => TokenLabel::NonEntity,
    }
}
