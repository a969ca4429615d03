//! Token lists and BIO-annotated corpora.
//!
//! Everything read from disk passes through a [`NormalizationPolicy`] so that
//! training lists, development data and test data agree on code points.
//! Case is never folded: capitalization carries signal.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizationPolicy {
    /// Apply canonical composition (NFC).
    pub compose: bool,
    pub strip_surrounding_whitespace: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        Self {
            compose: true,
            strip_surrounding_whitespace: true,
        }
    }
}

impl NormalizationPolicy {
    pub fn normalize(&self, text: &str) -> String {
        let composed: String = if self.compose {
            text.nfc().collect()
        } else {
            text.to_owned()
        };
        if self.strip_surrounding_whitespace {
            composed.trim().to_owned()
        } else {
            composed
        }
    }
}

/// An unordered bag of tokens. Multiplicity is kept because counts feed the
/// language model estimates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenList {
    tokens: Vec<String>,
    pub source_tag: String,
}

impl TokenList {
    /// Builds a list from raw strings, normalizing each and dropping those
    /// that end up empty.
    pub fn from_raw<I, S>(raw: I, policy: &NormalizationPolicy, source_tag: &str) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let tokens = raw
            .into_iter()
            .map(|t| policy.normalize(t.as_ref()))
            .filter(|t| !t.trim().is_empty())
            .collect();
        Self {
            tokens,
            source_tag: source_tag.to_owned(),
        }
    }

    /// Wraps already-normalized tokens. Empty strings are dropped.
    pub fn new(tokens: Vec<String>, source_tag: &str) -> Self {
        Self {
            tokens: tokens.into_iter().filter(|t| !t.is_empty()).collect(),
            source_tag: source_tag.to_owned(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.tokens
    }

    /// Keeps the first occurrence of every distinct token.
    pub fn dedup(&self) -> TokenList {
        let mut seen = HashSet::new();
        let tokens = self
            .tokens
            .iter()
            .filter(|t| seen.insert(t.as_str()))
            .cloned()
            .collect();
        TokenList {
            tokens,
            source_tag: self.source_tag.clone(),
        }
    }

    pub fn to_set(&self) -> HashSet<&str> {
        self.iter().collect()
    }

    /// One token per line, LF terminated.
    pub fn write_to<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for t in &self.tokens {
            writeln!(out, "{t}")?;
        }
        Ok(())
    }
}

/// Splits a file into lines (LF or CRLF), checking UTF-8 per line so the
/// error can point at the offending line.
pub(crate) fn utf8_lines<'a>(bytes: &'a [u8], path: &'a Path) -> impl Iterator<Item = Result<(usize, &'a str)>> + 'a {
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    let empty = bytes.is_empty();
    body.split(|&b| b == b'\n')
        .take(if empty { 0 } else { usize::MAX })
        .enumerate()
        .map(move |(i, line)| {
            let line = line.strip_suffix(b"\r").unwrap_or(line);
            std::str::from_utf8(line)
                .map(|s| (i + 1, s))
                .map_err(|_| Error::InvalidUtf8 {
                    path: path.to_owned(),
                    line: i + 1,
                })
        })
}

pub fn read_token_list(path: impl AsRef<Path>, policy: &NormalizationPolicy) -> Result<TokenList> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut raw = Vec::new();
    for line in utf8_lines(&bytes, path) {
        raw.push(line?.1);
    }
    Ok(TokenList::from_raw(raw, policy, &path.display().to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BioKind {
    B,
    I,
    O,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BioTag {
    kind: BioKind,
    entity_type: Option<String>,
}

impl BioTag {
    pub fn outside() -> Self {
        Self {
            kind: BioKind::O,
            entity_type: None,
        }
    }

    pub fn begin(entity_type: &str) -> Self {
        Self {
            kind: BioKind::B,
            entity_type: Some(entity_type.to_owned()),
        }
    }

    pub fn inside(entity_type: &str) -> Self {
        Self {
            kind: BioKind::I,
            entity_type: Some(entity_type.to_owned()),
        }
    }

    pub fn kind(&self) -> BioKind {
        self.kind
    }

    pub fn entity_type(&self) -> Option<&str> {
        self.entity_type.as_deref()
    }

    pub fn is_entity(&self) -> bool {
        self.kind != BioKind::O
    }
}

impl FromStr for BioTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kind = match s.as_bytes().first() {
            Some(b'O') if s.len() == 1 => return Ok(BioTag::outside()),
            Some(b'B') => BioKind::B,
            Some(b'I') => BioKind::I,
            _ => return Err(format!("unrecognized BIO tag {s:?}")),
        };
        let entity_type = match &s[1..] {
            "" => None,
            rest => match rest.strip_prefix('-') {
                Some(t) if !t.is_empty() => Some(t.to_owned()),
                _ => return Err(format!("unrecognized BIO tag {s:?}")),
            },
        };
        Ok(BioTag { kind, entity_type })
    }
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            BioKind::B => "B",
            BioKind::I => "I",
            BioKind::O => "O",
        };
        match &self.entity_type {
            Some(t) => write!(f, "{k}-{t}"),
            None => f.write_str(k),
        }
    }
}

/// Which whitespace-separated columns hold the token and the tag. The
/// default is the first and the last column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ColumnSpec {
    pub token: usize,
    /// `None` selects the last column.
    pub tag: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    /// Normalized surface form.
    pub token: String,
    pub tag: BioTag,
    /// The source line, minus its line terminator.
    pub raw: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<TaggedToken>,
    /// A `-DOCSTART-` line that preceded this sentence, verbatim.
    pub doc_start: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabeledCorpus {
    pub sentences: Vec<Sentence>,
    pub warnings: Vec<String>,
}

impl LabeledCorpus {
    pub fn tokens(&self) -> impl Iterator<Item = &TaggedToken> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }

    /// Builds a corpus in memory; `raw` is synthesized as `token<TAB>tag`.
    pub fn from_sentences<I, S>(sentences: I) -> Self
    where
        I: IntoIterator<Item = Vec<(S, BioTag)>>,
        S: Into<String>,
    {
        let sentences = sentences
            .into_iter()
            .map(|s| Sentence {
                tokens: s
                    .into_iter()
                    .map(|(tok, tag)| {
                        let token = tok.into();
                        let raw = format!("{token}\t{tag}");
                        TaggedToken { token, tag, raw }
                    })
                    .collect(),
                doc_start: None,
            })
            .collect();
        LabeledCorpus {
            sentences,
            warnings: Vec::new(),
        }
    }
}

pub fn read_bio_corpus(
    path: impl AsRef<Path>,
    columns: ColumnSpec,
    policy: &NormalizationPolicy,
) -> Result<LabeledCorpus> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_bio(&bytes, path, columns, policy)
}

/// Parses BIO column data already in memory. `path` is only used in messages.
pub fn parse_bio(
    bytes: &[u8],
    path: &Path,
    columns: ColumnSpec,
    policy: &NormalizationPolicy,
) -> Result<LabeledCorpus> {
    let mut corpus = LabeledCorpus::default();
    let mut current = Sentence::default();
    let mut pending_doc: Option<String> = None;

    let flush = |current: &mut Sentence, corpus: &mut LabeledCorpus| {
        if !current.tokens.is_empty() {
            corpus.sentences.push(std::mem::take(current));
        }
    };

    for line in utf8_lines(bytes, path) {
        let (lineno, line) = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            flush(&mut current, &mut corpus);
            continue;
        }
        if fields[0] == "-DOCSTART-" {
            flush(&mut current, &mut corpus);
            pending_doc = Some(line.to_owned());
            continue;
        }

        let parse_err = |message: String| Error::Parse {
            path: path.to_owned(),
            line: lineno,
            message,
        };
        let tag_col = columns.tag.unwrap_or(fields.len() - 1);
        if columns.token >= fields.len() || tag_col >= fields.len() {
            return Err(parse_err(format!(
                "missing column: need {} and {}, line has {} column(s)",
                columns.token,
                tag_col,
                fields.len()
            )));
        }
        if tag_col == columns.token {
            return Err(parse_err("token and tag resolve to the same column".into()));
        }
        let tag: BioTag = fields[tag_col].parse().map_err(parse_err)?;
        let token = policy.normalize(fields[columns.token]);
        if token.is_empty() {
            return Err(parse_err("token is empty after normalization".into()));
        }

        if tag.kind == BioKind::I {
            let continues = current
                .tokens
                .last()
                .map(|prev| prev.tag.is_entity() && prev.tag.entity_type == tag.entity_type)
                .unwrap_or(false);
            if !continues {
                let msg = format!("{}:{lineno}: {tag} does not continue an entity", path.display());
                log::warn!("{msg}");
                corpus.warnings.push(msg);
            }
        }

        if current.tokens.is_empty() {
            current.doc_start = pending_doc.take();
        }
        current.tokens.push(TaggedToken {
            token,
            tag,
            raw: line.to_owned(),
        });
    }
    flush(&mut current, &mut corpus);
    Ok(corpus)
}

/// Partitions corpus tokens by gold tag: B/I into the entity list, O into the
/// non-entity list. A surface form seen both ways lands in both lists.
pub fn extract_lists(corpus: &LabeledCorpus) -> (TokenList, TokenList) {
    let (entity, non_entity): (Vec<&TaggedToken>, Vec<&TaggedToken>) = corpus.tokens().partition(|t| t.tag.is_entity());
    let collect = |v: Vec<&TaggedToken>| v.into_iter().map(|t| t.token.clone()).collect();
    (
        TokenList::new(collect(entity), "entity"),
        TokenList::new(collect(non_entity), "non-entity"),
    )
}

/// True for gold entity tokens whose surface form never occurs among the
/// training entities.
pub fn unseen_mask(train_entities: &TokenList, test: &LabeledCorpus) -> Vec<bool> {
    let seen = train_entities.to_set();
    test.tokens()
        .map(|t| t.tag.is_entity() && !seen.contains(t.token.as_str()))
        .collect()
}
