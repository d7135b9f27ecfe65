//! End-to-end experiments: ingest, split, temperature sweep, τ-best
//! selection on dev token accuracy, test evaluation and reports.
//!
//! Seeds: every user-supplied seed is a master seed. The split uses
//! `derive_seed(master, Split, 0)`; the training cell for temperature `τ`
//! uses `derive_seed(master, Sampler, τ.to_bits())`. The split is shared by
//! all seeds of a run and derived from the first one.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::conllu::parse_conllu_file;
use crate::error::{Error, Result};
use crate::inflectors::{InflectionModel, ModelKind, TrainingMode};
use crate::lexicon::{lexicalize, FilterConfig, Lexicon};
use crate::metrics::{self, evaluate, EvalOutcome, Prediction, ResultRow};
use crate::rng::{self, derive_seed, Stage};
use crate::sampler::Temperature;
use crate::splitter::{split_lexicon, DataSplit, SplitConfig};

pub const SYSTEM_COPY: &str = "copy";
pub const SYSTEM_UNIFORM: &str = "tau=0.0";
pub const SYSTEM_SQRT: &str = "tau=0.5";
pub const SYSTEM_BEST: &str = "tau-best";
pub const MACRO_LANGUAGE: &str = "macro-avg";

pub const CELLS_FILE: &str = "cells.tsv";
pub const SYSTEMS_FILE: &str = "systems.tsv";
pub const RUN_META_FILE: &str = "run-meta.txt";
pub const CELLS_HEADER: &str =
    "language\ttau\tseed\tsplit\ttype_acc\ttoken_acc\titems\ttokens\ttype_acc_full\ttoken_acc_full";

/// Default temperature sweep grid.
pub const DEFAULT_TEMPERATURES: [f64; 19] = [
    -1.0, -0.8, -0.6, -0.5, -0.4, -0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.1, 2.0,
];

pub const DEFAULT_BATCH_SIZE: usize = 512;

pub fn default_temperatures() -> Vec<Temperature> {
    DEFAULT_TEMPERATURES
        .iter()
        .map(|&t| Temperature::new(t).expect("finite"))
        .collect()
}

/// How training votes are collected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeConfig {
    Expectation,
    /// One epoch is `ceil(M_T / batch_size)` batches of `batch_size` draws.
    Sampled { epochs: usize, batch_size: usize },
}

impl ModeConfig {
    pub fn training_mode(self, train: &Lexicon) -> TrainingMode {
        match self {
            ModeConfig::Expectation => TrainingMode::Expectation,
            ModeConfig::Sampled { epochs, batch_size } => {
                let batches = (train.token_mass() as usize).div_ceil(batch_size);
                TrainingMode::Sampled {
                    draws: epochs * batches * batch_size,
                }
            }
        }
    }

    fn describe(self) -> String {
        match self {
            ModeConfig::Expectation => "expectation".into(),
            ModeConfig::Sampled { epochs, batch_size } => {
                format!("sampled epochs={epochs} batch_size={batch_size}")
            }
        }
    }
}

/// Settings for sweeping temperatures over a fixed split.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub temperatures: Vec<Temperature>,
    pub model: ModelKind,
    pub mode: ModeConfig,
    pub seeds: Vec<u64>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperatures.is_empty() {
            return Err(Error::Config("temperature list is empty".into()));
        }
        for (i, a) in self.temperatures.iter().enumerate() {
            if self.temperatures[..i].iter().any(|b| b.value() == a.value()) {
                return Err(Error::Config(format!("temperature {a} is listed twice")));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if let ModeConfig::Sampled { epochs, batch_size } = self.mode {
            if epochs == 0 || batch_size == 0 {
                return Err(Error::Config("epochs and batch size must be positive".into()));
            }
        }
        Ok(())
    }
}

/// A full single-language experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub language: String,
    pub treebanks: Vec<PathBuf>,
    pub filter: FilterConfig,
    pub ratios: [u64; 3],
    pub sweep: SweepConfig,
    pub output_dir: Option<PathBuf>,
}

/// Outcomes for one (τ, seed) training cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub tau: Temperature,
    pub seed: u64,
    pub dev: EvalOutcome,
    pub test: EvalOutcome,
}

/// Everything a language run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub language: String,
    pub cells: Vec<SweepCell>,
    pub copy_dev: EvalOutcome,
    pub copy_test: EvalOutcome,
    pub tau_best: Temperature,
    pub test_items: usize,
    pub test_tokens: u64,
    /// Test (lemma, tag) keys with more than one gold form.
    pub free_variation_keys: usize,
    /// Test predictions of the first seed, per reported system.
    pub predictions: BTreeMap<String, Vec<Prediction>>,
    /// key=value lines describing the run.
    pub meta: Vec<(String, String)>,
}

/// Arg-max of dev token accuracy; ties go to the temperature closer to 0,
/// then to the smaller one.
pub fn select_tau_best(dev: &[(Temperature, f64)]) -> Result<Temperature> {
    let best = dev
        .iter()
        .copied()
        .reduce(|best, cand| {
            let better = cand.1 > best.1
                || (cand.1 == best.1
                    && (cand.0.value().abs() < best.0.value().abs()
                        || (cand.0.value().abs() == best.0.value().abs() && cand.0.value() < best.0.value())));
            if better {
                cand
            } else {
                best
            }
        })
        .ok_or(Error::EmptyInput("tau-best selection"))?;
    debug_assert!(dev.iter().all(|(_, acc)| *acc <= best.1));
    Ok(best.0)
}

fn mean_outcome(cells: &[&SweepCell], pick: impl Fn(&SweepCell) -> EvalOutcome) -> (f64, f64) {
    metrics::mean_pairs(cells.iter().map(|c| {
        let o = pick(c);
        (o.type_accuracy, o.token_accuracy)
    }))
    .expect("at least one seed")
}

impl SweepResult {
    fn cells_for(&self, tau: Temperature) -> Vec<&SweepCell> {
        self.cells.iter().filter(|c| c.tau.value() == tau.value()).collect()
    }

    /// Seed-averaged (type, token) dev accuracy per temperature.
    pub fn dev_by_tau(&self) -> Vec<(Temperature, (f64, f64))> {
        let mut taus: Vec<Temperature> = Vec::new();
        for c in &self.cells {
            if !taus.iter().any(|t| t.value() == c.tau.value()) {
                taus.push(c.tau);
            }
        }
        taus.into_iter()
            .map(|t| (t, mean_outcome(&self.cells_for(t), |c| c.dev)))
            .collect()
    }

    fn test_for(&self, tau: Temperature) -> Option<(f64, f64)> {
        let cells = self.cells_for(tau);
        (!cells.is_empty()).then(|| mean_outcome(&cells, |c| c.test))
    }

    /// Test rows for the reported systems: copy, τ=0.0 and τ=0.5 when swept,
    /// and τ-best. Best-per-metric flags are filled in.
    pub fn system_rows(&self) -> Vec<ResultRow> {
        let row = |system: &str, tau: String, acc: (f64, f64)| ResultRow {
            language: self.language.clone(),
            system: system.to_owned(),
            tau,
            type_accuracy: acc.0,
            token_accuracy: acc.1,
            items: self.test_items,
            tokens: self.test_tokens,
            best: "-".into(),
        };
        let mut rows = vec![row(
            SYSTEM_COPY,
            "-".into(),
            (self.copy_test.type_accuracy, self.copy_test.token_accuracy),
        )];
        for (label, tau) in [(SYSTEM_UNIFORM, 0.0), (SYSTEM_SQRT, 0.5)] {
            let tau = Temperature::new(tau).expect("finite");
            if let Some(acc) = self.test_for(tau) {
                rows.push(row(label, tau.to_string(), acc));
            }
        }
        let best = self.test_for(self.tau_best).expect("tau-best was swept");
        rows.push(row(SYSTEM_BEST, self.tau_best.to_string(), best));
        flag_best(&mut rows);
        rows
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let pred_dir = dir.join("predictions");
        fs::create_dir_all(&pred_dir).map_err(|e| Error::file(&pred_dir, e))?;

        let mut cells = String::new();
        writeln!(cells, "{CELLS_HEADER}").unwrap();
        let copy_lines = [("dev", &self.copy_dev), ("test", &self.copy_test)];
        for (split, o) in copy_lines {
            writeln!(cells, "{}", cell_line(&self.language, "copy", "-", split, o)).unwrap();
        }
        for c in &self.cells {
            for (split, o) in [("dev", &c.dev), ("test", &c.test)] {
                writeln!(
                    cells,
                    "{}",
                    cell_line(&self.language, &c.tau.to_string(), &c.seed.to_string(), split, o)
                )
                .unwrap();
            }
        }
        write_file(&dir.join(CELLS_FILE), cells.as_bytes())?;

        let path = dir.join(SYSTEMS_FILE);
        let file = fs::File::create(&path).map_err(|e| Error::file(&path, e))?;
        metrics::write_results(&self.system_rows(), BufWriter::new(file))?;

        let mut meta = String::new();
        for (k, v) in &self.meta {
            writeln!(meta, "{k}={v}").unwrap();
        }
        write_file(&dir.join(RUN_META_FILE), meta.as_bytes())?;

        for (system, preds) in &self.predictions {
            let path = pred_dir.join(format!("{system}.tsv"));
            let file = fs::File::create(&path).map_err(|e| Error::file(&path, e))?;
            metrics::write_predictions(preds, BufWriter::new(file))?;
        }
        Ok(())
    }
}

fn cell_line(language: &str, tau: &str, seed: &str, split: &str, o: &EvalOutcome) -> String {
    format!(
        "{language}\t{tau}\t{seed}\t{split}\t{:.2}\t{:.2}\t{}\t{}\t{}\t{}",
        o.type_accuracy * 100.0,
        o.token_accuracy * 100.0,
        o.item_total,
        o.token_total,
        o.type_accuracy,
        o.token_accuracy
    )
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::file(path, e))
}

/// Mark, per metric, the rows holding the maximum value (ties all marked).
fn flag_best(rows: &mut [ResultRow]) {
    let max_tok = rows.iter().map(|r| r.token_accuracy).fold(f64::NEG_INFINITY, f64::max);
    let max_typ = rows.iter().map(|r| r.type_accuracy).fold(f64::NEG_INFINITY, f64::max);
    for r in rows.iter_mut() {
        let mut flags = Vec::new();
        if r.token_accuracy == max_tok {
            flags.push("token");
        }
        if r.type_accuracy == max_typ {
            flags.push("type");
        }
        r.best = if flags.is_empty() { "-".into() } else { flags.join(",") };
    }
}

fn fit_and_eval(
    model: ModelKind,
    split: &DataSplit,
    tau: Temperature,
    seed: u64,
    mode: TrainingMode,
) -> Result<(Box<dyn InflectionModel + Send + Sync>, EvalOutcome, EvalOutcome)> {
    let mut m = model.build();
    m.fit(&split.train, tau, seed, mode)?;
    let dev = evaluate(&m.predict_lexicon(&split.dev), &split.dev)?;
    let test = evaluate(&m.predict_lexicon(&split.test), &split.test)?;
    Ok((m, dev, test))
}

/// Sweep temperatures over an existing split.
pub fn run_split(language: &str, split: &DataSplit, config: &SweepConfig) -> Result<SweepResult> {
    run_split_inner(language, split, config).map_err(|e| e.context(format!("language {language}")))
}

fn run_split_inner(language: &str, split: &DataSplit, config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    for (name, lex) in [("train", &split.train), ("dev", &split.dev), ("test", &split.test)] {
        if lex.is_empty() {
            return Err(Error::EmptyInput(match name {
                "train" => "train split",
                "dev" => "dev split",
                _ => "test split",
            }));
        }
    }

    let mode = config.mode.training_mode(&split.train);
    let copy = ModelKind::Copy.build();
    let copy_dev = evaluate(&copy.predict_lexicon(&split.dev), &split.dev)?;
    let copy_test = evaluate(&copy.predict_lexicon(&split.test), &split.test)?;

    let mut cells = Vec::new();
    let mut first_seed_models = Vec::new();
    for (si, &master) in config.seeds.iter().enumerate() {
        for &tau in &config.temperatures {
            let seed = derive_seed(master, Stage::Sampler, tau.value().to_bits());
            let (model, dev, test) = fit_and_eval(config.model, split, tau, seed, mode)?;
            cells.push(SweepCell { tau, seed: master, dev, test });
            if si == 0 {
                first_seed_models.push((tau, model));
            }
        }
    }

    let mut result = SweepResult {
        language: language.to_owned(),
        cells,
        copy_dev,
        copy_test,
        tau_best: config.temperatures[0],
        test_items: split.test.type_count(),
        test_tokens: split.test.token_mass(),
        free_variation_keys: metrics::free_variation_keys(&split.test).len(),
        predictions: BTreeMap::new(),
        meta: Vec::new(),
    };

    let dev: Vec<(Temperature, f64)> = result.dev_by_tau().into_iter().map(|(t, acc)| (t, acc.1)).collect();
    result.tau_best = select_tau_best(&dev)?;
    let best_dev = dev
        .iter()
        .find(|(t, _)| t.value() == result.tau_best.value())
        .map(|d| d.1)
        .expect("tau-best is swept");
    assert!(dev.iter().all(|(_, acc)| *acc <= best_dev));

    result
        .predictions
        .insert(SYSTEM_COPY.into(), copy.predict_lexicon(&split.test));
    for (tau, model) in &first_seed_models {
        let v = tau.value();
        let mut labels = Vec::new();
        if v == 0.0 {
            labels.push(SYSTEM_UNIFORM);
        }
        if v == 0.5 {
            labels.push(SYSTEM_SQRT);
        }
        if v == result.tau_best.value() {
            labels.push(SYSTEM_BEST);
        }
        for label in labels {
            result.predictions.insert(label.into(), model.predict_lexicon(&split.test));
        }
    }

    let temps: Vec<String> = config.temperatures.iter().map(|t| t.to_string()).collect();
    let seeds: Vec<String> = config.seeds.iter().map(|s| s.to_string()).collect();
    result.meta = vec![
        ("language".into(), language.to_owned()),
        ("model".into(), config.model.label().into()),
        (
            "rule_context".into(),
            match config.model {
                ModelKind::Rules { context } => context.to_string(),
                ModelKind::Copy => "-".into(),
            },
        ),
        ("mode".into(), config.mode.describe()),
        ("training_mode".into(), mode.to_string()),
        ("temperatures".into(), temps.join(",")),
        ("seeds".into(), seeds.join(",")),
        ("rng".into(), rng::RNG_NAME.into()),
        ("tau_best".into(), result.tau_best.to_string()),
        ("train_digest".into(), split.train.digest()),
        ("dev_digest".into(), split.dev.digest()),
        ("test_digest".into(), split.test.digest()),
        ("test_free_variation_keys".into(), result.free_variation_keys.to_string()),
    ];
    Ok(result)
}

/// Lexicalize one or more treebanks into a single merged lexicon.
pub fn ingest(treebanks: &[PathBuf], filter: &FilterConfig) -> Result<(Lexicon, usize)> {
    if treebanks.is_empty() {
        return Err(Error::Config("no treebank files given".into()));
    }
    let mut lexicon = Lexicon::new();
    let mut sentences = 0;
    for path in treebanks {
        let parsed = parse_conllu_file(path)?;
        sentences += parsed.len();
        lexicon = lexicon.merge(&lexicalize(&parsed, filter));
    }
    Ok((lexicon, sentences))
}

/// Seed actually used by the splitter for a master seed.
pub fn split_seed(master: u64) -> u64 {
    derive_seed(master, Stage::Split, 0)
}

/// Ingest, split and sweep one language. Writes outputs when
/// `output_dir` is set.
pub fn run_language(config: &ExperimentConfig) -> Result<SweepResult> {
    let lang = &config.language;
    config.sweep.validate()?;
    let (lexicon, sentences) = ingest(&config.treebanks, &config.filter).map_err(|e| e.context(format!("language {lang}")))?;
    let split_cfg = SplitConfig::new(config.ratios, split_seed(config.sweep.seeds[0]))?;
    let split = split_lexicon(&lexicon, &split_cfg).map_err(|e| e.context(format!("language {lang}")))?;
    let mut result = run_split(lang, &split, &config.sweep)?;

    let files: Vec<String> = config.treebanks.iter().map(|p| p.display().to_string()).collect();
    let mut extra = vec![
        ("treebanks".to_string(), files.join(",")),
        ("merged".to_string(), (config.treebanks.len() > 1).to_string()),
        ("sentences".to_string(), sentences.to_string()),
        ("lowercase".to_string(), config.filter.lowercase.to_string()),
        (
            "drop_upos".to_string(),
            config.filter.drop_upos.iter().cloned().collect::<Vec<_>>().join(","),
        ),
        ("ratios".to_string(), split_cfg.ratios_string()),
        ("split_seed".to_string(), split_cfg.seed.to_string()),
        ("source_digest".to_string(), lexicon.digest()),
    ];
    if let Some(meta) = &split.meta {
        extra.extend(meta.warnings.iter().map(|w| ("split_warning".to_string(), w.clone())));
    }
    result.meta.splice(1..1, extra);

    if let Some(dir) = &config.output_dir {
        split.write_dir(dir.join("split"))?;
        result.write_dir(dir)?;
    }
    Ok(result)
}

/// Per-language system rows plus macro-average rows, and a markdown table.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub rows: Vec<ResultRow>,
    pub markdown: String,
}

impl Report {
    pub fn write(&self, tsv_path: impl AsRef<Path>) -> Result<()> {
        let tsv_path = tsv_path.as_ref();
        let file = fs::File::create(tsv_path).map_err(|e| Error::file(tsv_path, e))?;
        metrics::write_results(&self.rows, BufWriter::new(file))?;
        write_file(&tsv_path.with_extension("md"), self.markdown.as_bytes())
    }

    pub fn macro_row(&self, system: &str) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.language == MACRO_LANGUAGE && r.system == system)
    }
}

pub fn render_report(results: &[SweepResult]) -> Result<Report> {
    let rows: Vec<ResultRow> = results.iter().flat_map(|r| r.system_rows()).collect();
    report_from_rows(rows)
}

const SYSTEM_ORDER: [&str; 4] = [SYSTEM_COPY, SYSTEM_UNIFORM, SYSTEM_SQRT, SYSTEM_BEST];

/// Build a report from per-language system rows (e.g. read back from
/// `systems.tsv` files). Macro rows average every language reporting the
/// system.
pub fn report_from_rows(mut rows: Vec<ResultRow>) -> Result<Report> {
    rows.retain(|r| r.language != MACRO_LANGUAGE);
    if rows.is_empty() {
        return Err(Error::EmptyInput("report"));
    }
    let mut languages: Vec<String> = Vec::new();
    for r in &rows {
        if !languages.contains(&r.language) {
            languages.push(r.language.clone());
        }
    }

    let mut out = Vec::new();
    for lang in &languages {
        let mut lang_rows: Vec<ResultRow> = rows.iter().filter(|r| &r.language == lang).cloned().collect();
        lang_rows.sort_by_key(|r| SYSTEM_ORDER.iter().position(|s| *s == r.system).unwrap_or(usize::MAX));
        flag_best(&mut lang_rows);
        out.extend(lang_rows);
    }

    let mut macro_rows = Vec::new();
    for system in SYSTEM_ORDER {
        let sys: Vec<&ResultRow> = out.iter().filter(|r| r.system == system).collect();
        if sys.is_empty() {
            continue;
        }
        let (type_acc, token_acc) = metrics::mean_pairs(sys.iter().map(|r| (r.type_accuracy, r.token_accuracy)))?;
        macro_rows.push(ResultRow {
            language: MACRO_LANGUAGE.into(),
            system: system.into(),
            tau: if system == SYSTEM_COPY || system == SYSTEM_BEST {
                "-".into()
            } else {
                sys[0].tau.clone()
            },
            type_accuracy: type_acc,
            token_accuracy: token_acc,
            items: sys.iter().map(|r| r.items).sum(),
            tokens: sys.iter().map(|r| r.tokens).sum(),
            best: "-".into(),
        });
    }
    flag_best(&mut macro_rows);
    out.extend(macro_rows);

    let markdown = render_markdown(&out, &languages);
    Ok(Report { rows: out, markdown })
}

fn render_markdown(rows: &[ResultRow], languages: &[String]) -> String {
    let present: Vec<&str> = SYSTEM_ORDER
        .iter()
        .copied()
        .filter(|s| rows.iter().any(|r| r.system == *s))
        .collect();
    let mut md = String::new();
    let cols: Vec<String> = present.iter().map(|s| s.to_string()).collect();
    writeln!(
        md,
        "| language | {} | | {} |",
        cols.iter().map(|c| format!("token {c}")).collect::<Vec<_>>().join(" | "),
        cols.iter().map(|c| format!("type {c}")).collect::<Vec<_>>().join(" | ")
    )
    .unwrap();
    writeln!(md, "|---|{}", "---|".repeat(2 * present.len() + 1)).unwrap();

    let mut all_langs: Vec<&str> = languages.iter().map(String::as_str).collect();
    all_langs.push(MACRO_LANGUAGE);
    for lang in all_langs {
        let cell = |system: &str, token: bool| -> String {
            match rows.iter().find(|r| r.language == lang && r.system == system) {
                None => "".into(),
                Some(r) => {
                    let (v, flag) = if token {
                        (r.token_accuracy, "token")
                    } else {
                        (r.type_accuracy, "type")
                    };
                    let s = format!("{:.2}", v * 100.0);
                    if r.best.split(',').any(|f| f == flag) {
                        format!("**{s}**")
                    } else {
                        s
                    }
                }
            }
        };
        let tok: Vec<String> = present.iter().map(|s| cell(s, true)).collect();
        let typ: Vec<String> = present.iter().map(|s| cell(s, false)).collect();
        writeln!(md, "| {lang} | {} | | {} |", tok.join(" | "), typ.join(" | ")).unwrap();
    }
    md
}
