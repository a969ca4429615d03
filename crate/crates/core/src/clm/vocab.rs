use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// Dense id of a predicted or context symbol. Ids 0..3 are the sentinels,
/// surface characters follow in code-point order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

impl Symbol {
    /// Context padding at token start. Never predicted.
    pub const BOS: Symbol = Symbol(0);
    /// End-of-token event, predicted once per token.
    pub const EOS: Symbol = Symbol(1);
    /// Any character not seen in training.
    pub const UNK: Symbol = Symbol(2);

    const FIRST_SURFACE: u32 = 3;

    pub fn id(self) -> u32 {
        self.0
    }

    pub fn is_sentinel(self) -> bool {
        self.0 < Self::FIRST_SURFACE
    }
}

pub const BOS_SPELLING: &str = "<s>";
pub const EOS_SPELLING: &str = "</s>";
pub const UNK_SPELLING: &str = "<unk>";
pub const SPACE_SPELLING: &str = "<sp>";

/// Closed character vocabulary of one model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CharVocab {
    chars: Vec<char>,
    index: HashMap<char, Symbol>,
}

impl CharVocab {
    pub fn from_chars<I: IntoIterator<Item = char>>(chars: I) -> Self {
        let chars: Vec<char> = chars.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let index = chars
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, Symbol(Symbol::FIRST_SURFACE + i as u32)))
            .collect();
        Self { chars, index }
    }

    pub fn from_tokens<'a, I: IntoIterator<Item = &'a str>>(tokens: I) -> Self {
        Self::from_chars(tokens.into_iter().flat_map(str::chars))
    }

    /// Number of surface characters, sentinels excluded.
    pub fn num_chars(&self) -> usize {
        self.chars.len()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn lookup(&self, c: char) -> Option<Symbol> {
        self.index.get(&c).copied()
    }

    /// Maps out-of-vocabulary characters to [`Symbol::UNK`].
    pub fn symbol(&self, c: char) -> Symbol {
        self.lookup(c).unwrap_or(Symbol::UNK)
    }

    pub fn char_of(&self, s: Symbol) -> Option<char> {
        s.0.checked_sub(Symbol::FIRST_SURFACE)
            .and_then(|i| self.chars.get(i as usize))
            .copied()
    }

    pub fn encode(&self, token: &str) -> Vec<Symbol> {
        token.chars().map(|c| self.symbol(c)).collect()
    }

    /// EOS, UNK and every surface character: the symbols a model predicts.
    pub fn predicted_alphabet(&self) -> impl Iterator<Item = Symbol> + '_ {
        [Symbol::EOS, Symbol::UNK]
            .into_iter()
            .chain((0..self.chars.len() as u32).map(|i| Symbol(Symbol::FIRST_SURFACE + i)))
    }

    pub fn predicted_alphabet_size(&self) -> usize {
        self.chars.len() + 2
    }

    /// ARPA spelling of a symbol.
    pub fn spell(&self, s: Symbol) -> String {
        match s {
            Symbol::BOS => BOS_SPELLING.into(),
            Symbol::EOS => EOS_SPELLING.into(),
            Symbol::UNK => UNK_SPELLING.into(),
            _ => spell_char(self.char_of(s).expect("symbol outside vocabulary")),
        }
    }
}

/// Spelling of a surface character in an ARPA gram. Whitespace and control
/// characters would break the line format, so they get escapes.
pub fn spell_char(c: char) -> String {
    if c == ' ' {
        SPACE_SPELLING.into()
    } else if c.is_whitespace() || c.is_control() {
        format!("<U+{:04X}>", c as u32)
    } else {
        c.to_string()
    }
}

/// A symbol spelled in an ARPA file, before it is mapped to an id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spelled {
    Bos,
    Eos,
    Unk,
    Char(char),
}

impl Spelled {
    pub fn parse(word: &str) -> Option<Spelled> {
        match word {
            BOS_SPELLING => return Some(Spelled::Bos),
            EOS_SPELLING => return Some(Spelled::Eos),
            UNK_SPELLING => return Some(Spelled::Unk),
            SPACE_SPELLING => return Some(Spelled::Char(' ')),
            _ => {}
        }
        if let Some(hex) = word.strip_prefix("<U+").and_then(|w| w.strip_suffix('>')) {
            return u32::from_str_radix(hex, 16)
                .ok()
                .and_then(char::from_u32)
                .map(Spelled::Char);
        }
        let mut it = word.chars();
        match (it.next(), it.next()) {
            (Some(c), None) => Some(Spelled::Char(c)),
            _ => None,
        }
    }
}

impl fmt::Display for Spelled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spelled::Bos => f.write_str(BOS_SPELLING),
            Spelled::Eos => f.write_str(EOS_SPELLING),
            Spelled::Unk => f.write_str(UNK_SPELLING),
            Spelled::Char(c) => f.write_str(&spell_char(*c)),
        }
    }
}
