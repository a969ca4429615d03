//! Character-level language models for named-entity identification.
//!
//! Two models are trained per language, one on entity tokens and one on
//! everything else. A token is scored under both and gets the label of the
//! model that finds it less perplexing, optionally after a perplexity
//! threshold on the entity model. The same comparison yields boolean features
//! for NER taggers.
//!
//! ```
//! use nameid_core::{clm, corpus::TokenList, identifier::{Identifier, IdentifierConfig, TokenLabel}};
//!
//! let names = TokenList::new(vec!["Obama".into(), "Merkel".into(), "Macron".into()], "names");
//! let words = TokenList::new(vec!["said".into(), "their".into(), "would".into()], "words");
//! let entity_lm = clm::train(&names, 3).unwrap();
//! let non_entity_lm = clm::train(&words, 3).unwrap();
//!
//! let id = Identifier::new(&entity_lm, &non_entity_lm);
//! let d = id.classify(&IdentifierConfig::default(), "Markel").unwrap();
//! assert_eq!(d.label, TokenLabel::Entity);
//! ```

pub mod clm;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod identifier;
pub mod synthetic;

pub use clm::{CharLm, CharVocab, NgramCounts, Symbol, TokenScore};
pub use corpus::{BioTag, ColumnSpec, LabeledCorpus, NormalizationPolicy, TokenList};
pub use error::{Error, Result};
pub use evaluation::{BinSpec, MaskScope, PerplexityHistogram, ReportFormat, TokenEvalReport};
pub use features::{FeatureSpec, FeatureVector};
pub use identifier::{Decision, IdentifierConfig, Rule, TokenLabel};
