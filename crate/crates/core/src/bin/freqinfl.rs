use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use freqinfl::harness::{self, ExperimentConfig, ModeConfig, SweepConfig};
use freqinfl::inflectors::{ModelKind, DEFAULT_CONTEXT};
use freqinfl::lexicon::{FilterConfig, Lexicon};
use freqinfl::metrics::{self, evaluate, read_predictions_file};
use freqinfl::splitter::{split_lexicon, DataSplit, SplitConfig};
use freqinfl::{Error, Result, Temperature};

#[derive(Parser, Debug)]
#[command(name = "freqinfl", version, about = "Frequency-aware morphological inflection toolkit")]
struct Cli {
    /// key=value config file; keys are the long flag names. Flags given on
    /// the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lexicalize CoNLL-U files into a lemma/tag/form/count TSV.
    Lexicalize {
        #[arg(required = true)]
        conllu: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        lowercase: bool,
        /// Comma-separated UPOS classes to drop.
        #[arg(long)]
        drop_upos: Option<String>,
    },
    /// Frequency-weighted lemma-disjoint train/dev/test split.
    Split {
        lexicon: PathBuf,
        #[arg(long)]
        ratios: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Temperature sweep over a split directory.
    Sweep {
        split_dir: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Language id used in results (defaults to the directory name).
        #[arg(long)]
        language: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Ingest, split and sweep one language end to end.
    Run {
        #[arg(required = true)]
        conllu: Vec<PathBuf>,
        #[arg(long)]
        language: Option<String>,
        #[arg(long)]
        lowercase: bool,
        #[arg(long)]
        drop_upos: Option<String>,
        #[arg(long)]
        ratios: Option<String>,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Score a predictions TSV (lemma, tag, form) against a gold lexicon.
    Evaluate { gold: PathBuf, predictions: PathBuf },
    /// Combine sweep result directories into a report table.
    Report {
        #[arg(required = true)]
        results: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(clap::Args, Debug)]
struct SweepArgs {
    /// Comma-separated temperatures (default: the 19-value grid).
    #[arg(long, allow_hyphen_values = true)]
    temperatures: Option<String>,
    /// rules | copy
    #[arg(long)]
    model: Option<String>,
    /// expectation | sampled
    #[arg(long)]
    mode: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated master seeds (overrides --seed).
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    rule_context: Option<usize>,
    /// Sampled mode: number of epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Sampled mode: draws per batch.
    #[arg(long)]
    batch_size: Option<usize>,
}

/// Parsed key=value config file.
#[derive(Default)]
struct Config(HashMap<String, String>);

impl Config {
    fn load(path: Option<&Path>) -> Result<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
            map.insert(k.trim().replace('_', "-"), v.trim().to_owned());
        }
        Ok(Config(map))
    }

    fn get<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>> {
        if cli.is_some() {
            return Ok(cli);
        }
        self.0
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("config key `{key}`: invalid value `{v}`")))
            })
            .transpose()
    }

    fn flag(&self, cli: bool, key: &str) -> Result<bool> {
        Ok(cli || self.get::<bool>(None, key)?.unwrap_or(false))
    }
}

fn required<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("missing required option --{name}")))
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| Error::Config(format!("invalid {what} `{p}`")))
        })
        .collect()
}

fn filter_config(cfg: &Config, lowercase: bool, drop_upos: Option<String>) -> Result<FilterConfig> {
    let drop: Option<String> = cfg.get(drop_upos, "drop-upos")?;
    Ok(FilterConfig {
        lowercase: cfg.flag(lowercase, "lowercase")?,
        drop_upos: drop
            .map(|s| parse_list::<String>(&s, "UPOS"))
            .transpose()?
            .unwrap_or_default()
            .into_iter()
            .collect::<BTreeSet<_>>(),
    })
}

fn ratios(cfg: &Config, cli: Option<String>) -> Result<[u64; 3]> {
    match cfg.get(cli, "ratios")? {
        Some(s) => SplitConfig::parse_ratios(&s),
        None => Ok(SplitConfig::default().ratios),
    }
}

fn sweep_config(cfg: &Config, a: SweepArgs) -> Result<SweepConfig> {
    let temperatures = match cfg.get(a.temperatures, "temperatures")? {
        Some(s) => parse_list::<Temperature>(&s, "temperature")?,
        None => harness::default_temperatures(),
    };
    let context = cfg.get(a.rule_context, "rule-context")?.unwrap_or(DEFAULT_CONTEXT);
    let model = match cfg.get(a.model, "model")?.as_deref().unwrap_or("rules") {
        "rules" => ModelKind::Rules { context },
        "copy" => ModelKind::Copy,
        other => return Err(Error::Config(format!("unknown model `{other}` (rules|copy)"))),
    };
    let mode = match cfg.get(a.mode, "mode")?.as_deref().unwrap_or("expectation") {
        "expectation" => ModeConfig::Expectation,
        "sampled" => ModeConfig::Sampled {
            epochs: cfg.get(a.epochs, "epochs")?.unwrap_or(1),
            batch_size: cfg.get(a.batch_size, "batch-size")?.unwrap_or(harness::DEFAULT_BATCH_SIZE),
        },
        other => return Err(Error::Config(format!("unknown mode `{other}` (expectation|sampled)"))),
    };
    let seeds = match cfg.get(a.seeds, "seeds")? {
        Some(s) => parse_list::<u64>(&s, "seed")?,
        None => vec![cfg.get(a.seed, "seed")?.unwrap_or(0)],
    };
    let sweep = SweepConfig {
        temperatures,
        model,
        mode,
        seeds,
    };
    sweep.validate()?;
    Ok(sweep)
}

fn dir_language(dir: &Path) -> String {
    dir.canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "lang".into())
}

fn results_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_file() {
            files.push(p.clone());
            continue;
        }
        let direct = p.join(harness::SYSTEMS_FILE);
        if direct.is_file() {
            files.push(direct);
            continue;
        }
        let mut found: Vec<PathBuf> = fs::read_dir(p)
            .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            .filter_map(|e| e.ok())
            .map(|e| e.path().join(harness::SYSTEMS_FILE))
            .filter(|f| f.is_file())
            .collect();
        if found.is_empty() {
            return Err(Error::Config(format!("no {} under {}", harness::SYSTEMS_FILE, p.display())));
        }
        found.sort();
        files.extend(found);
    }
    Ok(files)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Lexicalize {
            conllu,
            output,
            lowercase,
            drop_upos,
        } => {
            let filter = filter_config(&cfg, lowercase, drop_upos)?;
            let output: PathBuf = required(cfg.get(output, "output")?, "output")?;
            let (lexicon, sentences) = harness::ingest(&conllu, &filter)?;
            lexicon.write_tsv_file(&output)?;

            let mut meta = String::new();
            let files: Vec<String> = conllu.iter().map(|p| p.display().to_string()).collect();
            writeln!(meta, "treebanks={}", files.join(",")).unwrap();
            writeln!(meta, "merged={}", conllu.len() > 1).unwrap();
            writeln!(meta, "lowercase={}", filter.lowercase).unwrap();
            writeln!(meta, "drop_upos={}", filter.drop_upos.iter().cloned().collect::<Vec<_>>().join(",")).unwrap();
            writeln!(meta, "sentences={sentences}").unwrap();
            writeln!(meta, "token_mass={}", lexicon.token_mass()).unwrap();
            writeln!(meta, "type_count={}", lexicon.type_count()).unwrap();
            writeln!(meta, "digest={}", lexicon.digest()).unwrap();
            let meta_path = PathBuf::from(format!("{}.meta", output.display()));
            fs::write(&meta_path, meta).map_err(Error::Io)?;
            eprintln!(
                "{} sentences, {} tokens, {} triples -> {}",
                sentences,
                lexicon.token_mass(),
                lexicon.type_count(),
                output.display()
            );
        }
        Command::Split {
            lexicon,
            ratios: r,
            seed,
            output,
        } => {
            let lex = Lexicon::read_tsv_file(&lexicon)?;
            let master = cfg.get(seed, "seed")?.unwrap_or(0);
            let split_cfg = SplitConfig::new(ratios(&cfg, r)?, harness::split_seed(master))?;
            let output: PathBuf = required(cfg.get(output, "output")?, "output")?;
            let split = split_lexicon(&lex, &split_cfg)?;
            split.write_dir(&output)?;
            if let Some(meta) = &split.meta {
                for w in &meta.warnings {
                    eprintln!("warning: {w}");
                }
                eprintln!(
                    "train/dev/test mass {}/{}/{} -> {}",
                    meta.masses[0],
                    meta.masses[1],
                    meta.masses[2],
                    output.display()
                );
            }
        }
        Command::Sweep {
            split_dir,
            sweep,
            language,
            output,
        } => {
            let sweep = sweep_config(&cfg, sweep)?;
            let output: PathBuf = required(cfg.get(output, "output")?, "output")?;
            let language = cfg.get(language, "language")?.unwrap_or_else(|| dir_language(&split_dir));
            let split = DataSplit::read_dir(&split_dir)?;
            let result = harness::run_split(&language, &split, &sweep)?;
            result.write_dir(&output)?;
            print_systems(&result);
        }
        Command::Run {
            conllu,
            language,
            lowercase,
            drop_upos,
            ratios: r,
            sweep,
            output,
        } => {
            let filter = filter_config(&cfg, lowercase, drop_upos)?;
            let ratios = ratios(&cfg, r)?;
            let sweep = sweep_config(&cfg, sweep)?;
            let output: PathBuf = required(cfg.get(output, "output")?, "output")?;
            let language = cfg.get(language, "language")?.unwrap_or_else(|| "lang".into());
            let result = harness::run_language(&ExperimentConfig {
                language,
                treebanks: conllu,
                filter,
                ratios,
                sweep,
                output_dir: Some(output),
            })?;
            print_systems(&result);
        }
        Command::Evaluate { gold, predictions } => {
            let gold = Lexicon::read_tsv_file(&gold)?;
            let preds = read_predictions_file(&predictions)?;
            let o = evaluate(&preds, &gold)?;
            println!("items={}", o.item_total);
            println!("tokens={}", o.token_total);
            println!("correct_items={}", o.correct_items);
            println!("correct_tokens={}", o.correct_tokens);
            println!("type_acc={:.2}", o.type_accuracy * 100.0);
            println!("token_acc={:.2}", o.token_accuracy * 100.0);
            println!("type_acc_full={}", o.type_accuracy);
            println!("token_acc_full={}", o.token_accuracy);
            println!("free_variation_keys={}", metrics::free_variation_keys(&gold).len());
        }
        Command::Report { results, output } => {
            let output: PathBuf = required(cfg.get(output, "output")?, "output")?;
            let mut rows = Vec::new();
            for f in results_files(&results)? {
                let file = fs::File::open(&f).map_err(Error::Io)?;
                rows.extend(
                    metrics::read_results(std::io::BufReader::new(file))
                        .map_err(|e| e.context(f.display().to_string()))?,
                );
            }
            let report = harness::report_from_rows(rows)?;
            report.write(&output)?;
            print!("{}", report.markdown);
        }
    }
    Ok(())
}

fn print_systems(result: &harness::SweepResult) {
    println!("{}", metrics::RESULTS_HEADER);
    for r in result.system_rows() {
        println!("{}", r.to_line());
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
