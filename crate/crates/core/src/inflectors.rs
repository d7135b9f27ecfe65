//! Inflection models: the copy baseline and a suffix-rewrite rule learner.
//!
//! The rule learner collects `lemma_suffix -> form_suffix` rewrites per tag.
//! Each training entry votes for the rewrites it supports with its
//! temperature weight `count^τ` (expectation mode), or each sampled training
//! instance votes 1 (sampled mode). Prediction applies the winning rewrite
//! with the longest matching lemma suffix.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, MorphTag};
use crate::metrics::Prediction;
use crate::sampler::{self, Temperature};

/// Default number of shared-prefix characters added as rule context.
pub const DEFAULT_CONTEXT: usize = 3;

pub const MODEL_HEADER: &str = "tag\tlemma_suffix\tform_suffix\tvote";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainingMode {
    /// Every entry votes with its weight `count^τ`.
    Expectation,
    /// `draws` entries are sampled with replacement; each draw votes 1.
    Sampled { draws: usize },
}

impl fmt::Display for TrainingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainingMode::Expectation => f.write_str("expectation"),
            TrainingMode::Sampled { draws } => write!(f, "sampled({draws})"),
        }
    }
}

/// An inflection system: fitted on a training lexicon, then queried with
/// (lemma, tag) pairs.
pub trait InflectionModel {
    fn name(&self) -> &str;

    fn fit(&mut self, train: &Lexicon, tau: Temperature, seed: u64, mode: TrainingMode) -> Result<()>;

    /// Always returns a form; unknown inputs fall back to the lemma.
    fn predict(&self, lemma: &str, tag: &MorphTag) -> String;

    /// One prediction per distinct (lemma, tag) of `gold`.
    fn predict_lexicon(&self, gold: &Lexicon) -> Vec<Prediction> {
        let mut out: Vec<Prediction> = Vec::new();
        for e in gold.entries() {
            if out.last().is_some_and(|p| p.lemma == e.lemma && p.tag == e.tag) {
                continue;
            }
            out.push(Prediction {
                lemma: e.lemma.clone(),
                tag: e.tag.clone(),
                predicted_form: self.predict(&e.lemma, &e.tag),
            });
        }
        out
    }
}

/// Returns the lemma unchanged.
pub fn copy_predict(lemma: &str, _tag: &MorphTag) -> String {
    lemma.to_owned()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CopyModel;

impl InflectionModel for CopyModel {
    fn name(&self) -> &str {
        "copy"
    }

    fn fit(&mut self, _: &Lexicon, _: Temperature, _: u64, _: TrainingMode) -> Result<()> {
        Ok(())
    }

    fn predict(&self, lemma: &str, tag: &MorphTag) -> String {
        copy_predict(lemma, tag)
    }
}

/// Suffix rewrites supported by one (lemma, form) pair.
///
/// The first element strips the longest common prefix; the following ones
/// extend both suffixes leftwards by 1..=`context` characters of that
/// prefix.
pub fn extract_rule(lemma: &str, form: &str, context: usize) -> Vec<(String, String)> {
    let lcp_bytes: usize = lemma
        .chars()
        .zip(form.chars())
        .take_while(|(a, b)| a == b)
        .map(|(a, _)| a.len_utf8())
        .sum();
    let (prefix, lemma_rest) = lemma.split_at(lcp_bytes);
    let form_rest = &form[lcp_bytes..];

    let mut rules = vec![(lemma_rest.to_owned(), form_rest.to_owned())];
    let mut start = prefix.len();
    for _ in 0..context {
        let Some(c) = prefix[..start].chars().next_back() else {
            break;
        };
        start -= c.len_utf8();
        let ctx = &prefix[start..];
        rules.push((format!("{ctx}{lemma_rest}"), format!("{ctx}{form_rest}")));
    }
    rules
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuffixRule {
    pub tag: MorphTag,
    pub lemma_suffix: String,
    pub form_suffix: String,
    pub vote: f64,
}

/// Accumulated evidence: (tag, lemma_suffix) -> form_suffix -> vote.
pub type VoteTable = BTreeMap<(MorphTag, String), BTreeMap<String, f64>>;

/// Per-entry vote weights for a training mode.
fn entry_votes(train: &Lexicon, tau: Temperature, seed: u64, mode: TrainingMode) -> Result<Vec<f64>> {
    let dist = sampler::distribution(train, tau)?;
    match mode {
        TrainingMode::Expectation => Ok(dist.weights),
        TrainingMode::Sampled { draws } => {
            let mut votes = vec![0.0; train.type_count()];
            for id in sampler::draw(&dist, draws, seed)? {
                votes[id] += 1.0;
            }
            Ok(votes)
        }
    }
}

/// Collect rule votes over a training lexicon.
pub fn vote_table(
    train: &Lexicon,
    tau: Temperature,
    seed: u64,
    mode: TrainingMode,
    context: usize,
) -> Result<VoteTable> {
    if train.is_empty() {
        return Err(Error::EmptyInput("rule training lexicon"));
    }
    let weights = entry_votes(train, tau, seed, mode)?;
    let mut table = VoteTable::new();
    for (e, &w) in train.entries().iter().zip(&weights) {
        if w == 0.0 {
            continue;
        }
        for (ls, fs) in extract_rule(&e.lemma, &e.form, context) {
            *table
                .entry((e.tag.clone(), ls))
                .or_default()
                .entry(fs)
                .or_default() += w;
        }
    }
    for ((tag, ls), cands) in &table {
        if let Some((fs, v)) = cands.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NumericRange {
                entry: format!("rule {tag} {ls}->{fs}"),
                detail: format!("vote {v} is not finite"),
            });
        }
    }
    Ok(table)
}

/// Highest vote wins; ties prefer the shorter, then lexicographically
/// smaller form suffix.
fn pick_winner(cands: &BTreeMap<String, f64>) -> Option<(&String, f64)> {
    cands
        .iter()
        .filter(|(_, &v)| v > 0.0)
        .max_by(|(fa, va), (fb, vb)| {
            va.total_cmp(vb)
                .then_with(|| fb.chars().count().cmp(&fa.chars().count()))
                .then_with(|| fb.cmp(fa))
        })
        .map(|(f, &v)| (f, v))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingMeta {
    pub tau: Temperature,
    pub seed: u64,
    pub mode: TrainingMode,
}

/// Winning suffix rule per (tag, lemma_suffix).
#[derive(Clone, Debug, PartialEq)]
pub struct RuleModel {
    context: usize,
    rules: BTreeMap<MorphTag, BTreeMap<String, SuffixRule>>,
    meta: Option<TrainingMeta>,
}

impl Default for RuleModel {
    fn default() -> Self {
        RuleModel::new(DEFAULT_CONTEXT)
    }
}

impl RuleModel {
    pub fn new(context: usize) -> Self {
        RuleModel {
            context,
            rules: BTreeMap::new(),
            meta: None,
        }
    }

    pub fn from_votes(table: &VoteTable, context: usize) -> Self {
        let mut rules: BTreeMap<MorphTag, BTreeMap<String, SuffixRule>> = BTreeMap::new();
        for ((tag, ls), cands) in table {
            if let Some((fs, vote)) = pick_winner(cands) {
                rules.entry(tag.clone()).or_default().insert(
                    ls.clone(),
                    SuffixRule {
                        tag: tag.clone(),
                        lemma_suffix: ls.clone(),
                        form_suffix: fs.clone(),
                        vote,
                    },
                );
            }
        }
        RuleModel {
            context,
            rules,
            meta: None,
        }
    }

    pub fn context(&self) -> usize {
        self.context
    }

    pub fn meta(&self) -> Option<&TrainingMeta> {
        self.meta.as_ref()
    }

    pub fn rules(&self) -> impl Iterator<Item = &SuffixRule> {
        self.rules.values().flat_map(|m| m.values())
    }

    pub fn rule(&self, tag: &MorphTag, lemma_suffix: &str) -> Option<&SuffixRule> {
        self.rules.get(tag).and_then(|m| m.get(lemma_suffix))
    }

    pub fn len(&self) -> usize {
        self.rules.values().map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        if let Some(m) = &self.meta {
            writeln!(w, "# tau={}", m.tau.value())?;
            writeln!(w, "# seed={}", m.seed)?;
            writeln!(w, "# mode={}", m.mode)?;
        }
        writeln!(w, "# context={}", self.context)?;
        writeln!(w, "{MODEL_HEADER}")?;
        for r in self.rules() {
            writeln!(w, "{}\t{}\t{}\t{}", r.tag, r.lemma_suffix, r.form_suffix, r.vote)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reload rules written by [`RuleModel::write_tsv`]. Training metadata
    /// comments other than the context depth are not restored.
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<RuleModel> {
        let mut model = RuleModel::new(DEFAULT_CONTEXT);
        let mut seen_header = false;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            if let Some(comment) = line.strip_prefix("# ") {
                if let Some(c) = comment.strip_prefix("context=") {
                    model.context = c
                        .parse()
                        .map_err(|_| Error::parse(line_no, 0, "bad context depth"))?;
                }
                continue;
            }
            if !seen_header {
                if line != MODEL_HEADER {
                    return Err(Error::parse(line_no, 0, format!("expected header `{MODEL_HEADER}`")));
                }
                seen_header = true;
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(Error::parse(line_no, 0, format!("expected 4 columns, found {}", f.len())));
            }
            let tag = MorphTag::parse(f[0]).map_err(|e| Error::parse(line_no, 0, e.to_string()))?;
            let vote: f64 = f[3]
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite() && *v > 0.0)
                .ok_or_else(|| Error::parse(line_no, 0, "vote must be a positive number"))?;
            model.rules.entry(tag.clone()).or_default().insert(
                f[1].to_owned(),
                SuffixRule {
                    tag,
                    lemma_suffix: f[1].to_owned(),
                    form_suffix: f[2].to_owned(),
                    vote,
                },
            );
        }
        Ok(model)
    }

    pub fn read_tsv_file(path: impl AsRef<Path>) -> Result<RuleModel> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        RuleModel::read_tsv(std::io::BufReader::new(file))
    }
}

/// Fit a rule model on a training lexicon.
pub fn fit_rules(
    train: &Lexicon,
    tau: Temperature,
    seed: u64,
    mode: TrainingMode,
    context: usize,
) -> Result<RuleModel> {
    let table = vote_table(train, tau, seed, mode, context)?;
    let mut model = RuleModel::from_votes(&table, context);
    model.meta = Some(TrainingMeta { tau, seed, mode });
    Ok(model)
}

/// Apply the most specific matching rule, or copy the lemma.
pub fn rule_predict(model: &RuleModel, lemma: &str, tag: &MorphTag) -> String {
    if let Some(rules) = model.rules.get(tag) {
        let boundaries = lemma.char_indices().map(|(i, _)| i).chain(std::iter::once(lemma.len()));
        for i in boundaries {
            if let Some(rule) = rules.get(&lemma[i..]) {
                return format!("{}{}", &lemma[..i], rule.form_suffix);
            }
        }
    }
    lemma.to_owned()
}

impl InflectionModel for RuleModel {
    fn name(&self) -> &str {
        "rules"
    }

    fn fit(&mut self, train: &Lexicon, tau: Temperature, seed: u64, mode: TrainingMode) -> Result<()> {
        *self = fit_rules(train, tau, seed, mode, self.context)?;
        Ok(())
    }

    fn predict(&self, lemma: &str, tag: &MorphTag) -> String {
        rule_predict(self, lemma, tag)
    }
}

/// Which model a harness run trains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Copy,
    Rules { context: usize },
}

impl ModelKind {
    pub fn build(self) -> Box<dyn InflectionModel + Send + Sync> {
        match self {
            ModelKind::Copy => Box::new(CopyModel),
            ModelKind::Rules { context } => Box::new(RuleModel::new(context)),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Copy => "copy",
            ModelKind::Rules { .. } => "rules",
        }
    }
}

/// Winning form suffix per (tag, lemma_suffix).
pub fn winners(model: &RuleModel) -> HashMap<(MorphTag, String), String> {
    model
        .rules()
        .map(|r| ((r.tag.clone(), r.lemma_suffix.clone()), r.form_suffix.clone()))
        .collect()
}
