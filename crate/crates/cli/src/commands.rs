use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nameid_core::clm::{count_ngrams, estimate, read_arpa_file, write_arpa_file};
use nameid_core::corpus::{extract_lists, read_bio_corpus, read_token_list, unseen_mask};
use nameid_core::evaluation::{evaluate_tokens, histogram, read_labels, write_report_file};
use nameid_core::features::{annotate_corpus_file, load_feature_spec};
use nameid_core::identifier::Identifier;
use nameid_core::{BinSpec, CharLm, Error, IdentifierConfig, MaskScope, Result, TokenList};

use crate::args::*;

fn io_error(path: &Path, kind: std::io::ErrorKind, msg: &str) -> Error {
    Error::Io {
        path: path.to_owned(),
        source: std::io::Error::new(kind, msg),
    }
}

fn input(path: &Path) -> Result<()> {
    match std::fs::metadata(path) {
        Ok(m) if m.is_file() => Ok(()),
        Ok(_) => Err(io_error(path, std::io::ErrorKind::InvalidInput, "not a regular file")),
        Err(e) => Err(Error::Io {
            path: path.to_owned(),
            source: e,
        }),
    }
}

fn output(path: &Path) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if parent.is_dir() {
        Ok(())
    } else {
        Err(io_error(
            path,
            std::io::ErrorKind::NotFound,
            "output directory does not exist",
        ))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn finish(path: &Path, result: std::io::Result<()>) -> Result<()> {
    result.map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn write_tokens(tokens: &TokenList, path: &Path) -> Result<()> {
    let mut f = create(path)?;
    finish(path, tokens.write_to(&mut f).and_then(|_| f.flush()))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .unwrap_or(path.as_os_str())
        .to_string_lossy()
        .into_owned()
}

fn load_model(path: &Path) -> Result<CharLm> {
    let lm = read_arpa_file(path)?;
    log::info!(
        "{}: order {}, {} characters",
        path.display(),
        lm.order(),
        lm.vocab().num_chars()
    );
    Ok(lm)
}

fn decision_config(d: &DecisionArgs, threshold: Option<f64>) -> Result<IdentifierConfig> {
    let config = IdentifierConfig {
        threshold,
        min_length_rule: !d.no_length_rule,
        tie_policy: d.tie.into(),
    };
    config.validate()?;
    Ok(config)
}

pub fn train(a: TrainArgs) -> Result<()> {
    if a.order == 0 {
        return Err(Error::InvalidOrder(0));
    }
    input(&a.input)?;
    output(&a.out)?;

    let tokens = read_token_list(&a.input, &a.norm.policy())?;
    let tokens = if a.dedup { tokens.dedup() } else { tokens };
    let counts = count_ngrams(&tokens, a.order)?;
    let lm = estimate(&counts)?;
    write_arpa_file(&lm, &a.out)?;
    eprintln!(
        "order {}: {} tokens, vocabulary {} characters, {} events",
        a.order,
        tokens.len(),
        lm.vocab().num_chars(),
        counts.num_events()
    );
    Ok(())
}

pub fn extract(a: ExtractArgs) -> Result<()> {
    input(&a.corpus)?;
    output(&a.entities)?;
    output(&a.non_entities)?;
    if let Some(out) = &a.out {
        output(out)?;
    }

    let corpus = read_bio_corpus(&a.corpus, a.columns.spec(), &a.norm.policy())?;
    let (entities, non_entities) = extract_lists(&corpus);
    write_tokens(&entities, &a.entities)?;
    write_tokens(&non_entities, &a.non_entities)?;
    if let Some(out) = &a.out {
        let mut f = create(out)?;
        finish(
            out,
            writeln!(f, "entity_tokens\tnon_entity_tokens")
                .and_then(|_| writeln!(f, "{}\t{}", entities.len(), non_entities.len()))
                .and_then(|_| f.flush()),
        )?;
    }
    eprintln!(
        "entity tokens: {}, non-entity tokens: {}",
        entities.len(),
        non_entities.len()
    );
    Ok(())
}

pub fn classify(a: ClassifyArgs) -> Result<()> {
    decision_config(&a.decision, a.threshold)?;
    input(&a.models.entity_lm)?;
    input(&a.models.nonentity_lm)?;
    for p in [&a.tokens, &a.corpus, &a.dev].into_iter().flatten() {
        input(p)?;
    }
    output(&a.out)?;
    if let Some(p) = &a.audit {
        output(p)?;
    }

    let policy = a.norm.policy();
    let entity_lm = load_model(&a.models.entity_lm)?;
    let non_entity_lm = load_model(&a.models.nonentity_lm)?;
    let id = Identifier::new(&entity_lm, &non_entity_lm);

    let mut config = decision_config(&a.decision, a.threshold)?;
    if let Some(dev) = &a.dev {
        let dev = read_bio_corpus(dev, a.columns.spec(), &policy)?;
        let tuned = id.tune_threshold(&dev, &config)?;
        eprintln!("tuned threshold {} (dev F1 {:.4})", tuned.threshold, tuned.f1);
        config = config.with_threshold(tuned.as_option());
    }

    let tokens: Vec<String> = match (&a.tokens, &a.corpus) {
        (Some(p), _) => read_token_list(p, &policy)?.as_slice().to_vec(),
        (None, Some(p)) => read_bio_corpus(p, a.columns.spec(), &policy)?
            .tokens()
            .map(|t| t.token.clone())
            .collect(),
        (None, None) => unreachable!("clap requires one input"),
    };
    let decisions = id.classify_batch(&config, &tokens)?;

    let mut f = create(&a.out)?;
    let written = decisions
        .iter()
        .try_for_each(|d| writeln!(f, "{}", d.label))
        .and_then(|_| f.flush());
    finish(&a.out, written)?;

    if let Some(path) = &a.audit {
        let mut f = create(path)?;
        let written = writeln!(f, "token\tlabel\tentity_ppl\tnon_entity_ppl\trule")
            .and_then(|_| {
                tokens.iter().zip(&decisions).try_for_each(|(t, d)| {
                    writeln!(
                        f,
                        "{t}\t{}\t{}\t{}\t{}",
                        d.label, d.entity_ppl, d.non_entity_ppl, d.rule_fired
                    )
                })
            })
            .and_then(|_| f.flush());
        finish(path, written)?;
    }

    let entities = decisions.iter().filter(|d| d.label.is_entity()).count();
    eprintln!("{} tokens, {} labeled ENTITY", decisions.len(), entities);
    Ok(())
}

pub fn tune(a: TuneArgs) -> Result<()> {
    let base = decision_config(&a.decision, None)?;
    input(&a.models.entity_lm)?;
    input(&a.models.nonentity_lm)?;
    input(&a.dev)?;
    output(&a.out)?;

    let entity_lm = load_model(&a.models.entity_lm)?;
    let non_entity_lm = load_model(&a.models.nonentity_lm)?;
    let dev = read_bio_corpus(&a.dev, a.columns.spec(), &a.norm.policy())?;
    let tuned = Identifier::new(&entity_lm, &non_entity_lm).tune_threshold(&dev, &base)?;

    let mut f = create(&a.out)?;
    finish(&a.out, writeln!(f, "{}", tuned.threshold).and_then(|_| f.flush()))?;
    eprintln!("threshold {} (dev F1 {:.4})", tuned.threshold, tuned.f1);
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<()> {
    input(&a.pred)?;
    input(&a.gold)?;
    if let Some(p) = &a.unseen_against {
        input(p)?;
    }
    output(&a.out)?;

    let policy = a.norm.policy();
    let predictions = read_labels(&a.pred)?;
    let gold = read_bio_corpus(&a.gold, a.columns.spec(), &policy)?;
    let mask = match &a.unseen_against {
        Some(p) => Some(unseen_mask(&read_token_list(p, &policy)?, &gold)),
        None => None,
    };
    let scope = if a.global_precision {
        MaskScope::GlobalPrecision
    } else {
        MaskScope::Symmetric
    };
    let report = evaluate_tokens(&gold, &predictions, mask.as_deref(), scope)?;
    write_report_file(&report, &a.out, a.format.into())?;
    eprintln!(
        "P {:.4} R {:.4} F1 {:.4}{}",
        report.precision,
        report.recall,
        report.f1,
        if report.restricted_to_unseen {
            " (unseen entities)"
        } else {
            ""
        }
    );
    Ok(())
}

pub fn annotate(a: AnnotateArgs) -> Result<()> {
    input(&a.corpus)?;
    input(&a.features)?;
    output(&a.out)?;

    let spec = load_feature_spec(&a.features)?;
    let corpus = read_bio_corpus(&a.corpus, a.columns.spec(), &a.norm.policy())?;
    annotate_corpus_file(&corpus, &spec, &a.out)?;
    eprintln!(
        "{} tokens annotated with {}",
        corpus.num_tokens(),
        spec.column_names().join(", ")
    );
    Ok(())
}

pub fn histogram_cmd(a: HistogramArgs) -> Result<()> {
    let bins = match (a.edges, a.bins) {
        (Some(e), _) => BinSpec::Edges(e),
        (None, Some(count)) => BinSpec::LogSpaced { count },
        (None, None) => BinSpec::default(),
    };
    input(&a.lm)?;
    input(&a.tokens)?;
    output(&a.out)?;

    let lm = load_model(&a.lm)?;
    let mut tokens = read_token_list(&a.tokens, &a.norm.policy())?;
    tokens.source_tag = file_name(&a.tokens);
    let tag = a.tag.unwrap_or_else(|| file_name(&a.lm));
    let hist = histogram(&lm, &tokens, &bins, &tag)?;
    write_report_file(&hist, &a.out, a.format.into())?;
    eprintln!(
        "{} tokens: mean perplexity {:.4}, variance {:.4}",
        hist.num_tokens, hist.mean, hist.variance
    );
    Ok(())
}
