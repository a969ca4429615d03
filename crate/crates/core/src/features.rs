//! Boolean CLM features for downstream NER taggers, and writers for
//! feature-augmented CoNLL files.
//!
//! A feature compares the perplexity of a token under one model against its
//! perplexity under the non-entity model and fires when the first is strictly
//! lower. `is_entity` uses the entity model; language features use a model
//! trained on names of one origin.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::Deserialize;

use crate::clm::{read_arpa_file, CharLm};
use crate::corpus::LabeledCorpus;
use crate::error::{Error, Result};

pub fn is_entity_feature(entity_lm: &CharLm, non_entity_lm: &CharLm, token: &str) -> Result<bool> {
    Ok(entity_lm.perplexity(token)? < non_entity_lm.perplexity(token)?)
}

pub fn is_language_feature(language_lm: &CharLm, non_entity_lm: &CharLm, token: &str) -> Result<bool> {
    Ok(language_lm.perplexity(token)? < non_entity_lm.perplexity(token)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureKind {
    IsEntity,
    IsLanguage { tag: String },
}

#[derive(Debug, Clone)]
pub struct FeatureDef {
    pub name: String,
    pub kind: FeatureKind,
    pub model: Arc<CharLm>,
    /// The non-entity model.
    pub against: Arc<CharLm>,
}

impl FeatureDef {
    pub fn is_entity(name: &str, entity_lm: Arc<CharLm>, non_entity_lm: Arc<CharLm>) -> Self {
        Self {
            name: name.to_owned(),
            kind: FeatureKind::IsEntity,
            model: entity_lm,
            against: non_entity_lm,
        }
    }

    pub fn is_language(name: &str, tag: &str, language_lm: Arc<CharLm>, non_entity_lm: Arc<CharLm>) -> Self {
        Self {
            name: name.to_owned(),
            kind: FeatureKind::IsLanguage { tag: tag.to_owned() },
            model: language_lm,
            against: non_entity_lm,
        }
    }

    pub fn compute(&self, token: &str) -> Result<bool> {
        match self.kind {
            FeatureKind::IsEntity => is_entity_feature(&self.model, &self.against, token),
            FeatureKind::IsLanguage { .. } => is_language_feature(&self.model, &self.against, token),
        }
    }
}

/// Ordered feature definitions, plus an optional column that is the OR of
/// all language features.
#[derive(Debug, Clone, Default)]
pub struct FeatureSpec {
    features: Vec<FeatureDef>,
    any_language: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector(pub Vec<bool>);

impl FeatureSpec {
    pub fn new(features: Vec<FeatureDef>, any_language: Option<String>) -> Result<Self> {
        let mut names = HashSet::new();
        for name in features.iter().map(|f| &f.name).chain(any_language.as_ref()) {
            if !names.insert(name.as_str()) {
                return Err(Error::FeatureConfig(format!("duplicate feature name {name:?}")));
            }
        }
        Ok(Self { features, any_language })
    }

    pub fn features(&self) -> &[FeatureDef] {
        &self.features
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.features
            .iter()
            .map(|f| f.name.as_str())
            .chain(self.any_language.as_deref())
            .collect()
    }

    pub fn arity(&self) -> usize {
        self.features.len() + usize::from(self.any_language.is_some())
    }

    pub fn compute(&self, token: &str) -> Result<FeatureVector> {
        let mut values = Vec::with_capacity(self.arity());
        let mut any = false;
        for f in &self.features {
            let v = f.compute(token)?;
            any |= v && matches!(f.kind, FeatureKind::IsLanguage { .. });
            values.push(v);
        }
        if self.any_language.is_some() {
            values.push(any);
        }
        Ok(FeatureVector(values))
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawFeature {
    Pair([PathBuf; 2]),
    Table {
        kind: Option<String>,
        model: PathBuf,
        against: PathBuf,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    any_language: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    features: IndexMap<String, RawFeature>,
    options: Option<RawOptions>,
}

/// Reads a TOML feature config. Each key under `[features]` names an output
/// column; the value is either a `[model, non_entity_model]` path pair or a
/// table with `model`, `against` and an optional `kind` (`entity` or
/// `language`). Without `kind`, a feature named `is_entity` is the entity
/// feature and anything else a language feature. Relative paths are resolved
/// against the config file's directory.
///
/// ```toml
/// [features]
/// is_entity = ["entity.arpa", "non_entity.arpa"]
/// is_russian = { kind = "language", model = "russian.arpa", against = "non_entity.arpa" }
///
/// [options]
/// any_language = "is_foreign"
/// ```
pub fn load_feature_spec(path: impl AsRef<Path>) -> Result<FeatureSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: RawConfig = toml::from_str(&text).map_err(|e| Error::FeatureConfig(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));

    let mut cache: HashMap<PathBuf, Arc<CharLm>> = HashMap::new();
    let mut load = |p: &Path| -> Result<Arc<CharLm>> {
        let full = base.join(p);
        if let Some(m) = cache.get(&full) {
            return Ok(m.clone());
        }
        let m = Arc::new(read_arpa_file(&full)?);
        cache.insert(full, m.clone());
        Ok(m)
    };

    let mut defs = Vec::new();
    for (name, f) in &raw.features {
        let (kind, model, against) = match f {
            RawFeature::Pair([m, a]) => (None, m, a),
            RawFeature::Table { kind, model, against } => (kind.as_deref(), model, against),
        };
        let kind = match kind {
            Some("entity") => FeatureKind::IsEntity,
            Some("language") => FeatureKind::IsLanguage { tag: name.clone() },
            None if name == "is_entity" => FeatureKind::IsEntity,
            None => FeatureKind::IsLanguage { tag: name.clone() },
            Some(other) => {
                return Err(Error::FeatureConfig(format!(
                    "feature {name:?}: unknown kind {other:?}"
                )));
            }
        };
        defs.push(FeatureDef {
            name: name.clone(),
            kind,
            model: load(model)?,
            against: load(against)?,
        });
    }
    FeatureSpec::new(defs, raw.options.and_then(|o| o.any_language))
}

fn write_doc_start(out: &mut dyn Write, doc: &Option<String>) -> std::io::Result<()> {
    if let Some(line) = doc {
        writeln!(out, "{line}")?;
        writeln!(out)?;
    }
    Ok(())
}

/// Writes a corpus in its source layout: original token lines, a blank line
/// after each sentence.
pub fn write_corpus(corpus: &LabeledCorpus, out: &mut dyn Write) -> std::io::Result<()> {
    for s in &corpus.sentences {
        write_doc_start(out, &s.doc_start)?;
        for t in &s.tokens {
            writeln!(out, "{}", t.raw)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes the corpus with one extra column per feature, spelled `1`/`0`.
/// The separator matches the line: tab if the line contains one, else space.
pub fn annotate_corpus(corpus: &LabeledCorpus, spec: &FeatureSpec, out: &mut dyn Write) -> Result<()> {
    let tokens: Vec<&str> = corpus.tokens().map(|t| t.token.as_str()).collect();
    let vectors: Vec<FeatureVector> = tokens.par_iter().map(|t| spec.compute(t)).collect::<Result<_>>()?;

    let io = |e| Error::io("<annotated corpus>", e);
    let mut vectors = vectors.into_iter();
    for s in &corpus.sentences {
        write_doc_start(out, &s.doc_start).map_err(io)?;
        for t in &s.tokens {
            let sep = if t.raw.contains('\t') { '\t' } else { ' ' };
            let mut line = t.raw.clone();
            for &v in &vectors.next().expect("one vector per token").0 {
                line.push(sep);
                line.push(if v { '1' } else { '0' });
            }
            writeln!(out, "{line}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    Ok(())
}

pub fn annotate_corpus_file(corpus: &LabeledCorpus, spec: &FeatureSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    annotate_corpus(corpus, spec, &mut f).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    f.flush().map_err(|e| Error::io(path, e))
}
