//! Character-level n-gram language models.
//!
//! A token is treated as a sentence whose words are its characters. Models are
//! estimated with interpolated Witten-Bell smoothing and can be exchanged as
//! ARPA files.

mod arpa;
mod counts;
mod model;
mod vocab;

pub use arpa::{read_arpa, read_arpa_file, write_arpa, write_arpa_file};
pub use counts::{count_ngrams, HistoryCounts, NgramCounts};
pub use model::{estimate, CharLm, TokenScore};
pub use vocab::{spell_char, CharVocab, Spelled, Symbol};

use crate::corpus::TokenList;
use crate::error::Result;

pub const DEFAULT_ORDER: usize = 6;

/// Counts and estimates in one step.
pub fn train(tokens: &TokenList, order: usize) -> Result<CharLm> {
    estimate(&count_ngrams(tokens, order)?)
}
