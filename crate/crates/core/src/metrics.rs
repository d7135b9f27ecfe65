//! Type and token accuracy.
//!
//! Type accuracy counts each gold triple once; token accuracy weights each
//! triple by its occurrence count. Forms are compared after NFC
//! normalization.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use unicode_normalization::{is_nfc, UnicodeNormalization};

use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, MorphTag};

pub const PREDICTIONS_HEADER: &str = "lemma\ttag\tform";
pub const RESULTS_HEADER: &str =
    "language\tsystem\ttau\ttype_acc\ttoken_acc\titems\ttokens\ttype_acc_full\ttoken_acc_full\tbest";

/// A predicted form for one (lemma, tag) input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prediction {
    pub lemma: String,
    pub tag: MorphTag,
    pub predicted_form: String,
}

/// Paired type/token accuracy on one gold lexicon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalOutcome {
    pub type_accuracy: f64,
    pub token_accuracy: f64,
    pub item_total: usize,
    pub token_total: u64,
    pub correct_items: usize,
    pub correct_tokens: u64,
}

impl EvalOutcome {
    pub fn new(correct_items: usize, item_total: usize, correct_tokens: u64, token_total: u64) -> Self {
        assert!(correct_items <= item_total && correct_tokens <= token_total);
        assert!(item_total > 0 && token_total > 0);
        EvalOutcome {
            type_accuracy: correct_items as f64 / item_total as f64,
            token_accuracy: correct_tokens as f64 / token_total as f64,
            item_total,
            token_total,
            correct_items,
            correct_tokens,
        }
    }
}

fn same_form(a: &str, b: &str) -> bool {
    if is_nfc(a) && is_nfc(b) {
        a == b
    } else {
        a.nfc().eq(b.nfc())
    }
}

/// Score predictions against every row of the gold lexicon.
///
/// Exactly one prediction is required per gold (lemma, tag); predictions
/// for keys absent from the gold lexicon are ignored. Gold rows sharing a
/// (lemma, tag) are each scored against that single prediction.
pub fn evaluate(predictions: &[Prediction], gold: &Lexicon) -> Result<EvalOutcome> {
    if gold.is_empty() {
        return Err(Error::EmptyInput("evaluation gold lexicon"));
    }

    let mut needed: BTreeMap<(&str, &MorphTag), Vec<&str>> = BTreeMap::new();
    for e in gold.entries() {
        needed.entry((e.lemma.as_str(), &e.tag)).or_default();
    }
    for p in predictions {
        if let Some(v) = needed.get_mut(&(p.lemma.as_str(), &p.tag)) {
            v.push(p.predicted_form.as_str());
        }
    }

    let mut missing = Vec::new();
    let mut duplicate = Vec::new();
    for ((lemma, tag), preds) in &needed {
        match preds.len() {
            0 => missing.push(format!("{lemma}/{tag}")),
            1 => {}
            _ => duplicate.push(format!("{lemma}/{tag}")),
        }
    }
    if !missing.is_empty() || !duplicate.is_empty() {
        let keys = missing
            .iter()
            .chain(&duplicate)
            .take(10)
            .cloned()
            .collect::<Vec<_>>()
            .join(", ");
        return Err(Error::Coverage {
            missing: missing.len(),
            duplicate: duplicate.len(),
            keys,
        });
    }

    let (mut correct_items, mut correct_tokens) = (0, 0);
    for e in gold.entries() {
        let predicted = needed[&(e.lemma.as_str(), &e.tag)][0];
        if same_form(predicted, &e.form) {
            correct_items += 1;
            correct_tokens += e.count;
        }
    }

    Ok(EvalOutcome::new(
        correct_items,
        gold.type_count(),
        correct_tokens,
        gold.token_mass(),
    ))
}

pub fn type_accuracy(predictions: &[Prediction], gold: &Lexicon) -> Result<f64> {
    evaluate(predictions, gold).map(|o| o.type_accuracy)
}

pub fn token_accuracy(predictions: &[Prediction], gold: &Lexicon) -> Result<f64> {
    evaluate(predictions, gold).map(|o| o.token_accuracy)
}

/// Unweighted mean of (type accuracy, token accuracy) across outcomes.
pub fn macro_average(outcomes: &[EvalOutcome]) -> Result<(f64, f64)> {
    mean_pairs(outcomes.iter().map(|o| (o.type_accuracy, o.token_accuracy)))
}

pub(crate) fn mean_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<(f64, f64)> {
    let (mut a, mut b, mut n) = (0.0, 0.0, 0usize);
    for (x, y) in pairs {
        a += x;
        b += y;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyInput("macro average"));
    }
    Ok((a / n as f64, b / n as f64))
}

/// (lemma, tag) keys with more than one gold form.
pub fn free_variation_keys(gold: &Lexicon) -> Vec<(String, MorphTag)> {
    let mut counts: HashMap<(&str, &MorphTag), usize> = HashMap::new();
    for e in gold.entries() {
        *counts.entry((&e.lemma, &e.tag)).or_default() += 1;
    }
    let mut keys: Vec<_> = counts
        .into_iter()
        .filter(|&(_, n)| n > 1)
        .map(|((l, t), _)| (l.to_owned(), t.clone()))
        .collect();
    keys.sort();
    keys
}

pub fn write_predictions<W: Write>(predictions: &[Prediction], mut w: W) -> Result<()> {
    writeln!(w, "{PREDICTIONS_HEADER}")?;
    for p in predictions {
        writeln!(w, "{}\t{}\t{}", p.lemma, p.tag, p.predicted_form)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if idx == 0 {
            if line != PREDICTIONS_HEADER {
                return Err(Error::parse(1, 0, format!("expected header `{PREDICTIONS_HEADER}`")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(idx + 1, 0, format!("expected 3 columns, found {}", fields.len())));
        }
        out.push(Prediction {
            lemma: fields[0].to_owned(),
            tag: MorphTag::parse(fields[1]).map_err(|e| Error::parse(idx + 1, 0, e.to_string()))?,
            predicted_form: fields[2].to_owned(),
        });
    }
    Ok(out)
}

pub fn read_predictions_file(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    read_predictions(std::io::BufReader::new(file)).map_err(|e| e.context(path.display().to_string()))
}

/// One line of a results table.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub language: String,
    pub system: String,
    /// `-` for systems without a temperature.
    pub tau: String,
    pub type_accuracy: f64,
    pub token_accuracy: f64,
    pub items: usize,
    pub tokens: u64,
    /// Comma-separated metrics on which this row is best for its language,
    /// `-` otherwise.
    pub best: String,
}

impl ResultRow {
    pub fn to_line(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{}\t{}\t{}\t{:.2}\t{:.2}\t{}\t{}\t{}\t{}\t{}",
            self.language,
            self.system,
            self.tau,
            self.type_accuracy * 100.0,
            self.token_accuracy * 100.0,
            self.items,
            self.tokens,
            self.type_accuracy,
            self.token_accuracy,
            self.best
        )
        .unwrap();
        s
    }

    pub fn parse_line(line: &str) -> Result<ResultRow> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 10 {
            return Err(Error::parse(0, 0, format!("results row has {} columns, expected 10", f.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::parse(0, 0, format!("`{s}` is not a number")))
        };
        Ok(ResultRow {
            language: f[0].to_owned(),
            system: f[1].to_owned(),
            tau: f[2].to_owned(),
            type_accuracy: num(f[7])?,
            token_accuracy: num(f[8])?,
            items: num(f[5])? as usize,
            tokens: num(f[6])? as u64,
            best: f[9].to_owned(),
        })
    }
}

pub fn write_results<W: Write>(rows: &[ResultRow], mut w: W) -> Result<()> {
    writeln!(w, "{RESULTS_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.to_line())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results<R: BufRead>(reader: R) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if idx == 0 {
            if line != RESULTS_HEADER {
                return Err(Error::parse(1, 0, "unexpected results header"));
            }
            continue;
        }
        if !line.is_empty() {
            rows.push(ResultRow::parse_line(&line).map_err(|e| e.context(format!("results line {}", idx + 1)))?);
        }
    }
    Ok(rows)
}
