//! Token-level metrics and perplexity histograms.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clm::CharLm;
use crate::corpus::{utf8_lines, LabeledCorpus, TokenList};
use crate::error::{Error, Result};
use crate::identifier::TokenLabel;

/// Binary confusion counts with ENTITY as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn add(&mut self, gold_entity: bool, predicted_entity: bool) {
        match (gold_entity, predicted_entity) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    /// Turns one ENTITY prediction into NON_ENTITY.
    pub(crate) fn retract_entity_prediction(&mut self, gold_entity: bool) {
        if gold_entity {
            self.tp -= 1;
            self.fn_ += 1;
        } else {
            self.fp -= 1;
            self.tn += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Computed from counts as 2tp / (2tp + fp + fn), so equal count ratios
    /// give bit-identical values.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// How precision is scoped when an unseen-entity mask is given.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MaskScope {
    /// Precision and recall both restricted to masked tokens.
    #[default]
    Symmetric,
    /// Precision over all tokens, recall over masked tokens.
    GlobalPrecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenEvalReport {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub restricted_to_unseen: bool,
}

impl TokenEvalReport {
    fn from_confusion(c: &Confusion, restricted_to_unseen: bool) -> Self {
        Self {
            true_pos: c.tp,
            false_pos: c.fp,
            false_neg: c.fn_,
            true_neg: c.tn,
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
            accuracy: c.accuracy(),
            restricted_to_unseen,
        }
    }

    pub fn confusion(&self) -> Confusion {
        Confusion {
            tp: self.true_pos,
            fp: self.false_pos,
            fn_: self.false_neg,
            tn: self.true_neg,
        }
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::InvalidArgument(format!("report JSON: {e}")))
    }
}

/// Reads one label per line, skipping blank and `-DOCSTART-` lines. When a
/// line has several whitespace-separated columns the last one is the label,
/// so BIO files and tagger output can be read directly.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<TokenLabel>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for line in utf8_lines(&bytes, path) {
        let (n, line) = line?;
        let Some(last) = line.split_whitespace().last() else {
            continue;
        };
        if line.starts_with("-DOCSTART-") {
            continue;
        }
        let label = last.parse().map_err(|message| Error::Parse {
            path: path.to_owned(),
            line: n,
            message,
        })?;
        labels.push(label);
    }
    Ok(labels)
}

/// Scores binary predictions against gold tags (B/I = ENTITY, O = NON_ENTITY).
///
/// With a mask, counts cover masked tokens only. Under
/// [`MaskScope::GlobalPrecision`] the reported precision (and F1) instead use
/// every token's prediction.
pub fn evaluate_tokens(
    gold: &LabeledCorpus,
    predictions: &[TokenLabel],
    mask: Option<&[bool]>,
    scope: MaskScope,
) -> Result<TokenEvalReport> {
    let gold: Vec<bool> = gold.tokens().map(|t| t.tag.is_entity()).collect();
    let pred: Vec<bool> = predictions.iter().map(|p| p.is_entity()).collect();
    evaluate_binary(&gold, &pred, mask, scope)
}

pub fn evaluate_binary(
    gold: &[bool],
    pred: &[bool],
    mask: Option<&[bool]>,
    scope: MaskScope,
) -> Result<TokenEvalReport> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch {
            expected: gold.len(),
            actual: pred.len(),
        });
    }
    if let Some(m) = mask {
        if m.len() != gold.len() {
            return Err(Error::LengthMismatch {
                expected: gold.len(),
                actual: m.len(),
            });
        }
    }
    let mut all = Confusion::default();
    let mut masked = Confusion::default();
    for i in 0..gold.len() {
        all.add(gold[i], pred[i]);
        if mask.is_none_or(|m| m[i]) {
            masked.add(gold[i], pred[i]);
        }
    }
    let mut report = TokenEvalReport::from_confusion(&masked, mask.is_some());
    if mask.is_some() && scope == MaskScope::GlobalPrecision {
        let p = all.precision();
        let r = report.recall;
        report.precision = p;
        report.f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub enum BinSpec {
    /// Strictly increasing edges. Values below the first edge fall in the
    /// first bin; values at or above the last edge fall in the overflow bin.
    Edges(Vec<f64>),
    /// `count` log-spaced edges from 1 to the 99th-percentile perplexity.
    LogSpaced { count: usize },
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec::LogSpaced { count: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    /// `None` for the overflow bin.
    pub hi: Option<f64>,
    pub count: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerplexityHistogram {
    pub model_tag: String,
    pub token_set_tag: String,
    pub bins: Vec<HistogramBin>,
    pub num_tokens: usize,
    pub mean: f64,
    /// Sample variance (n - 1 denominator); 0 for a single token.
    pub variance: f64,
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn resolve_edges(spec: &BinSpec, sorted: &[f64]) -> Result<Vec<f64>> {
    let edges = match spec {
        BinSpec::Edges(e) => e.clone(),
        BinSpec::LogSpaced { count } => {
            if *count < 2 {
                return Err(Error::InvalidArgument("need at least 2 bin edges".into()));
            }
            let p99 = nearest_rank(sorted, 0.99);
            let hi = if p99 > 1.0 { p99 } else { 2.0 };
            let steps = (*count - 1) as f64;
            (0..*count).map(|i| 10f64.powf(hi.log10() * i as f64 / steps)).collect()
        }
    };
    if edges.is_empty() {
        return Err(Error::InvalidArgument("no bin edges".into()));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "bin edges must be finite and strictly increasing".into(),
        ));
    }
    Ok(edges)
}

/// Histogram of per-token perplexities from `perplexities`.
pub fn histogram_from_perplexities(
    perplexities: &[f64],
    bins: &BinSpec,
    model_tag: &str,
    token_set_tag: &str,
) -> Result<PerplexityHistogram> {
    if perplexities.is_empty() {
        return Err(Error::InvalidArgument("histogram of an empty token list".into()));
    }
    let mut sorted = perplexities.to_vec();
    sorted.sort_by(f64::total_cmp);
    let edges = resolve_edges(bins, &sorted)?;

    let mut counts = vec![0u64; edges.len()];
    for &p in perplexities {
        // Index of the last edge <= p, with underflow clamped into bin 0.
        let i = edges.partition_point(|&e| e <= p).saturating_sub(1);
        counts[i] += 1;
    }
    let n = perplexities.len();
    let bins = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| HistogramBin {
            lo: edges[i],
            hi: edges.get(i + 1).copied(),
            count,
            percent: 100.0 * count as f64 / n as f64,
        })
        .collect();

    let mean = sorted.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        sorted.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Ok(PerplexityHistogram {
        model_tag: model_tag.to_owned(),
        token_set_tag: token_set_tag.to_owned(),
        bins,
        num_tokens: n,
        mean,
        variance,
    })
}

pub fn histogram(model: &CharLm, tokens: &TokenList, bins: &BinSpec, model_tag: &str) -> Result<PerplexityHistogram> {
    if tokens.is_empty() {
        return Err(Error::InvalidArgument("histogram of an empty token list".into()));
    }
    let ppl: Vec<f64> = model
        .score_batch(tokens.as_slice())?
        .into_iter()
        .map(|s| s.perplexity)
        .collect();
    histogram_from_perplexities(&ppl, bins, model_tag, &tokens.source_tag)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Tsv,
    JsonLines,
}

pub trait Report {
    fn write_tsv(&self, out: &mut dyn Write) -> std::io::Result<()>;
    fn write_json_lines(&self, out: &mut dyn Write) -> std::io::Result<()>;
}

impl Report for TokenEvalReport {
    fn write_tsv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(
            out,
            "true_pos\tfalse_pos\tfalse_neg\ttrue_neg\tprecision\trecall\tf1\taccuracy\trestricted_to_unseen"
        )?;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}",
            self.true_pos,
            self.false_pos,
            self.false_neg,
            self.true_neg,
            self.precision,
            self.recall,
            self.f1,
            self.accuracy,
            self.restricted_to_unseen
        )
    }

    fn write_json_lines(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(
            out,
            "{{\"true_pos\":{},\"false_pos\":{},\"false_neg\":{},\"true_neg\":{},\"precision\":{:.4},\"recall\":{:.4},\"f1\":{:.4},\"accuracy\":{:.4},\"restricted_to_unseen\":{}}}",
            self.true_pos,
            self.false_pos,
            self.false_neg,
            self.true_neg,
            self.precision,
            self.recall,
            self.f1,
            self.accuracy,
            self.restricted_to_unseen
        )
    }
}

impl Report for PerplexityHistogram {
    fn write_tsv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "bin_lo\tbin_hi\tpercent")?;
        for b in &self.bins {
            match b.hi {
                Some(hi) => writeln!(out, "{:.4}\t{:.4}\t{:.4}", b.lo, hi, b.percent)?,
                None => writeln!(out, "{:.4}\tinf\t{:.4}", b.lo, b.percent)?,
            }
        }
        Ok(())
    }

    fn write_json_lines(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let model = serde_json::to_string(&self.model_tag).unwrap();
        let tokens = serde_json::to_string(&self.token_set_tag).unwrap();
        for b in &self.bins {
            let hi = b.hi.map_or_else(|| "null".to_owned(), |h| format!("{h:.4}"));
            writeln!(
                out,
                "{{\"model\":{model},\"tokens\":{tokens},\"bin_lo\":{:.4},\"bin_hi\":{hi},\"count\":{},\"percent\":{:.4}}}",
                b.lo, b.count, b.percent
            )?;
        }
        Ok(())
    }
}

pub fn write_report<R: Report + ?Sized>(report: &R, out: &mut dyn Write, format: ReportFormat) -> std::io::Result<()> {
    match format {
        ReportFormat::Tsv => report.write_tsv(out),
        ReportFormat::JsonLines => report.write_json_lines(out),
    }
}

pub fn write_report_file<R: Report + ?Sized>(report: &R, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    write_report(report, &mut f, format)
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(path, e))
}
