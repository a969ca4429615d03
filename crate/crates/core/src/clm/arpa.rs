//! ARPA text format for character models.
//!
//! Grams are space-separated characters. `<s>`, `</s>` and `<unk>` are the
//! sentinels, a space character is written `<sp>` and other whitespace or
//! control characters `<U+XXXX>`. Columns are tab-separated:
//! `log10prob<TAB>gram[<TAB>log10bow]`. Grams made only of `<s>` are never
//! predicted and carry the conventional `-99` placeholder probability.
//!
//! Values are written in shortest round-trip form, so reading a written
//! model back reproduces every probability bit for bit.

use std::collections::HashMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use super::model::{CharLm, NgramEntry, Weight};
use super::vocab::{CharVocab, Spelled, Symbol};
use crate::error::{Error, Result};

const NO_PROB: f64 = -99.0;

pub fn write_arpa<W: Write>(model: &CharLm, out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    let vocab = model.vocab();
    let mut grams: Vec<(&[Symbol], &NgramEntry)> = model.entries().iter().map(|(g, e)| (&**g, e)).collect();
    grams.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(b.0)));

    writeln!(out, "\\data\\")?;
    for n in 1..=model.order() {
        let count = grams.iter().filter(|(g, _)| g.len() == n).count();
        writeln!(out, "ngram {n}={count}")?;
    }
    let mut i = 0;
    for n in 1..=model.order() {
        writeln!(out)?;
        writeln!(out, "\\{n}-grams:")?;
        while i < grams.len() && grams[i].0.len() == n {
            let (gram, entry) = grams[i];
            let spelled: Vec<String> = gram.iter().map(|&s| vocab.spell(s)).collect();
            let lp = entry.prob.map_or(NO_PROB, |w| w.log10);
            write!(out, "{}\t{}", lp, spelled.join(" "))?;
            if let Some(b) = entry.bow {
                write!(out, "\t{}", b.log10)?;
            }
            writeln!(out)?;
            i += 1;
        }
    }
    writeln!(out)?;
    writeln!(out, "\\end\\")?;
    out.flush()
}

pub fn write_arpa_file(model: &CharLm, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_arpa(model, f).map_err(|e| Error::io(path, e))
}

pub fn read_arpa_file(path: impl AsRef<Path>) -> Result<CharLm> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_arpa(std::io::BufReader::new(f)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

struct RawEntry {
    gram: Vec<Spelled>,
    log_prob: f64,
    log_bow: Option<f64>,
}

fn parse_value(text: &str, section: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::arpa(section, format!("bad number {text:?}")))?;
    if !v.is_finite() {
        return Err(Error::arpa(section, format!("non-finite value {text:?}")));
    }
    Ok(v)
}

fn parse_entry(line: &str, n: usize, section: &str) -> Result<RawEntry> {
    // Tab-separated is the native layout; plain whitespace is accepted when
    // no tab is present.
    let (prob, words, bow): (&str, Vec<&str>, Option<&str>) = if line.contains('\t') {
        let cols: Vec<&str> = line.split('\t').collect();
        match cols.as_slice() {
            [p, g] => (p, g.split(' ').collect(), None),
            [p, g, b] => (p, g.split(' ').collect(), Some(b)),
            _ => return Err(Error::arpa(section, format!("malformed line {line:?}"))),
        }
    } else {
        let cols: Vec<&str> = line.split_whitespace().collect();
        match cols.len() {
            l if l == n + 1 => (cols[0], cols[1..].to_vec(), None),
            l if l == n + 2 => (cols[0], cols[1..=n].to_vec(), Some(cols[n + 1])),
            _ => return Err(Error::arpa(section, format!("malformed line {line:?}"))),
        }
    };
    if words.len() != n {
        return Err(Error::arpa(
            section,
            format!("expected {n} symbol(s) in {line:?}, found {}", words.len()),
        ));
    }
    let gram = words
        .iter()
        .map(|w| Spelled::parse(w).ok_or_else(|| Error::arpa(section, format!("bad symbol {w:?}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(RawEntry {
        gram,
        log_prob: parse_value(prob, section)?,
        log_bow: bow.map(|b| parse_value(b, section)).transpose()?,
    })
}

pub fn read_arpa<R: BufRead>(reader: R) -> Result<CharLm> {
    let mut lines = reader.lines();
    let mut next_line = || -> Result<Option<String>> { lines.next().transpose().map_err(|e| Error::io("<arpa>", e)) };

    // Header
    loop {
        match next_line()? {
            Some(l) if l.trim() == "\\data\\" => break,
            Some(_) => continue,
            None => return Err(Error::arpa("\\data\\", "missing header")),
        }
    }
    let mut declared: Vec<usize> = Vec::new();
    let mut pending: Option<String> = None;
    while let Some(line) = next_line()? {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let Some(decl) = t.strip_prefix("ngram ") else {
            pending = Some(t.to_owned());
            break;
        };
        let (n, c) = decl
            .split_once('=')
            .ok_or_else(|| Error::arpa("\\data\\", format!("bad declaration {t:?}")))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| Error::arpa("\\data\\", format!("bad declaration {t:?}")))?;
        let c: usize = c
            .trim()
            .parse()
            .map_err(|_| Error::arpa("\\data\\", format!("bad declaration {t:?}")))?;
        if n != declared.len() + 1 {
            return Err(Error::arpa(
                "\\data\\",
                format!("orders must be declared 1..N in sequence, got {n}"),
            ));
        }
        declared.push(c);
    }
    if declared.is_empty() {
        return Err(Error::arpa("\\data\\", "no ngram declarations"));
    }

    // Sections
    let order = declared.len();
    let mut raw: Vec<RawEntry> = Vec::new();
    let mut header = pending;
    for n in 1..=order {
        let section = format!("\\{n}-grams:");
        match header.take() {
            Some(h) if h == section => {}
            Some(h) => return Err(Error::arpa(&section, format!("expected section header, found {h:?}"))),
            None => return Err(Error::arpa(&section, "missing section")),
        }
        let mut found = 0usize;
        while let Some(line) = next_line()? {
            let t = line.trim_end_matches(['\r', '\n']);
            if t.trim().is_empty() {
                continue;
            }
            if t.starts_with('\\') {
                header = Some(t.trim().to_owned());
                break;
            }
            raw.push(parse_entry(t, n, &section)?);
            found += 1;
        }
        if found != declared[n - 1] {
            return Err(Error::arpa(
                &section,
                format!("declared {} entries, found {found}", declared[n - 1]),
            ));
        }
    }
    match header {
        Some(h) if h == "\\end\\" => {}
        Some(h) => return Err(Error::arpa("\\end\\", format!("unexpected {h:?}"))),
        None => return Err(Error::arpa("\\end\\", "missing end marker")),
    }

    let vocab = CharVocab::from_chars(
        raw.iter()
            .filter(|e| e.gram.len() == 1)
            .filter_map(|e| match e.gram[0] {
                Spelled::Char(c) => Some(c),
                _ => None,
            }),
    );
    let to_symbol = |s: Spelled| -> Result<Symbol> {
        Ok(match s {
            Spelled::Bos => Symbol::BOS,
            Spelled::Eos => Symbol::EOS,
            Spelled::Unk => Symbol::UNK,
            Spelled::Char(c) => vocab
                .lookup(c)
                .ok_or_else(|| Error::arpa("\\1-grams:", format!("character {c:?} used but has no unigram")))?,
        })
    };

    let mut entries: HashMap<Box<[Symbol]>, NgramEntry> = HashMap::with_capacity(raw.len());
    for e in &raw {
        let gram = e.gram.iter().map(|&s| to_symbol(s)).collect::<Result<Vec<_>>>()?;
        let predicted = *gram.last().unwrap();
        let entry = NgramEntry {
            prob: (predicted != Symbol::BOS).then(|| Weight::from_log10(e.log_prob)),
            bow: e.log_bow.map(Weight::from_log10),
        };
        if entries.insert(gram.into(), entry).is_some() {
            return Err(Error::arpa(format!("\\{}-grams:", e.gram.len()), "duplicate entry"));
        }
    }
    for required in [Symbol::EOS, Symbol::UNK] {
        if entries.get(&[required][..]).and_then(|e| e.prob).is_none() {
            return Err(Error::arpa(
                "\\1-grams:",
                format!("missing unigram {}", vocab.spell(required)),
            ));
        }
    }
    Ok(CharLm::from_parts(order, vocab, entries))
}
