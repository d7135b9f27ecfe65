mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use freqinfl::harness::{self, run_split, ModeConfig, SweepConfig};
use freqinfl::rng::seeded;
use freqinfl::sampler::{compute_weights, distribution, draw};
use freqinfl::splitter::group_by_lemma;
use freqinfl::{
    evaluate, macro_average, split_lexicon, CopyModel, DataSplit, EvalOutcome, FilterConfig, InflectionModel, LexEntry,
    Lexicon, ModelKind, Prediction, SamplingDistribution, SplitConfig, Temperature,
};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

enum Outcome {
    Pass(String),
    Skip(String),
}

type Check = Result<Outcome, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn t(x: f64) -> Temperature {
    Temperature::new(x).unwrap()
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

fn weight_arithmetic() -> Check {
    let w = compute_weights(&[400], t(0.5)).map_err(|e| e.to_string())?;
    ensure(w[0] == 20.0, || format!("400^0.5 = {}", w[0]))?;
    let d = SamplingDistribution::from_counts(&[400, 1], t(2.0)).map_err(|e| e.to_string())?;
    let ratio = d.probabilities[0] / d.probabilities[1];
    ensure(rel_err(ratio, 160_000.0) <= 1e-9, || format!("ratio {ratio}"))?;
    Ok(Outcome::Pass(format!("400^0.5 = {}, 400:1 ratio at τ=2 = {ratio}", w[0])))
}

fn special_cases() -> Check {
    let mut rng = seeded(2);
    for _ in 0..1000 {
        let lex = common::random_lexicon(&mut rng, 100, 5000);
        let v = lex.type_count() as f64;
        let m = lex.token_mass() as f64;
        let uniform = distribution(&lex, t(0.0)).map_err(|e| e.to_string())?;
        let raw = distribution(&lex, t(1.0)).map_err(|e| e.to_string())?;
        for (i, e) in lex.entries().iter().enumerate() {
            ensure((uniform.probabilities[i] - 1.0 / v).abs() <= 1e-12, || "τ=0 not uniform".into())?;
            ensure((raw.probabilities[i] - e.count as f64 / m).abs() <= 1e-12, || "τ=1 not c/M".into())?;
        }
    }
    Ok(Outcome::Pass("1000 lexicons".into()))
}

fn ratio_law() -> Check {
    let mut rng = seeded(3);
    for _ in 0..10_000 {
        let n = rng.gen_range(2..=20);
        let counts: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=10_000)).collect();
        let tau = t(rng.gen_range(-1.0..=2.0));
        let k = rng.gen_range(2..=50u64);
        let d = SamplingDistribution::from_counts(&counts, tau).map_err(|e| e.to_string())?;
        let scaled: Vec<u64> = counts.iter().map(|c| c * k).collect();
        let ds = SamplingDistribution::from_counts(&scaled, tau).map_err(|e| e.to_string())?;
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let want = (counts[i] as f64 / counts[j] as f64).powf(tau.value());
        let got = d.probabilities[i] / d.probabilities[j];
        ensure(rel_err(got, want) <= 1e-9, || format!("ratio law {counts:?} τ={tau}"))?;
        for (a, b) in d.probabilities.iter().zip(&ds.probabilities) {
            ensure(rel_err(*b, *a) <= 1e-9, || format!("scaling by {k} changed {a} to {b}"))?;
        }
    }
    Ok(Outcome::Pass("10000 (counts, τ) pairs".into()))
}

fn sampler_statistics() -> Check {
    let mut rng = seeded(4);
    let counts: Vec<u64> = (0..100).map(|_| rng.gen_range(1..=1000)).collect();
    let d = SamplingDistribution::from_counts(&counts, t(0.7)).map_err(|e| e.to_string())?;
    let n = 1_000_000;
    let draws = draw(&d, n, 99).map_err(|e| e.to_string())?;
    let mut observed = vec![0u64; 100];
    for &i in &draws {
        observed[i] += 1;
    }
    let stat: f64 = observed
        .iter()
        .zip(&d.probabilities)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let critical = ChiSquared::new(99.0).unwrap().inverse_cdf(0.999);
    ensure(stat < critical, || format!("chi-square {stat:.2} >= {critical:.2}"))?;
    ensure(draws == draw(&d, n, 99).map_err(|e| e.to_string())?, || "same seed, different draws".into())?;
    Ok(Outcome::Pass(format!("chi-square {stat:.2} < {critical:.2}; seeded draws repeat")))
}

fn split_properties() -> Check {
    let mut rng = seeded(5);
    let mut done = 0;
    while done < 1000 {
        let lex = common::random_lexicon(&mut rng, 60, 200);
        let groups = group_by_lemma(&lex).map_err(|e| e.to_string())?;
        if groups.len() < 3 {
            continue;
        }
        let max_group = groups.iter().map(|g| g.mass).max().unwrap();
        let cfg = SplitConfig::new([8, 1, 1], rng.gen()).map_err(|e| e.to_string())?;
        let split = split_lexicon(&lex, &cfg).map_err(|e| e.to_string())?;

        let [a, b, c] = split.parts().map(|p| p.lemmas());
        ensure(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c), || "lemma overlap".into())?;
        let union = split.train.merge(&split.dev).merge(&split.test);
        ensure(union == lex, || "entries not conserved".into())?;
        let (tm, m) = (split.train.token_mass(), lex.token_mass());
        ensure(10 * tm >= 8 * m && 10 * tm < 8 * m + 10 * max_group, || {
            format!("train mass {tm} outside [0.8·{m}, 0.8·{m} + {max_group})")
        })?;
        ensure(split_lexicon(&lex, &cfg).map_err(|e| e.to_string())? == split, || "not deterministic".into())?;
        done += 1;
    }
    Ok(Outcome::Pass("1000 lexicons".into()))
}

fn metric_oracle() -> Check {
    let mut rng = seeded(6);
    for round in 0..500 {
        let lex = common::random_lexicon(&mut rng, 100, 1000);
        let mut forms: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
        for e in lex.entries() {
            forms.entry((e.lemma.clone(), e.tag.to_string())).or_default().push(e.form.clone());
        }
        let preds: Vec<Prediction> = forms
            .iter()
            .map(|((lemma, tag), fs)| Prediction {
                lemma: lemma.clone(),
                tag: common::tag(tag),
                predicted_form: if rng.gen_bool(0.3) { "wrong".into() } else { fs[rng.gen_range(0..fs.len())].clone() },
            })
            .collect();
        let o = evaluate(&preds, &lex).map_err(|e| e.to_string())?;

        // One gold occurrence per token.
        let lookup: BTreeMap<(&str, String), &str> = preds
            .iter()
            .map(|p| ((p.lemma.as_str(), p.tag.to_string()), p.predicted_form.as_str()))
            .collect();
        let mut occurrences = Vec::new();
        for e in lex.entries() {
            for _ in 0..e.count {
                occurrences.push(e);
            }
        }
        let hits = occurrences
            .iter()
            .filter(|e| lookup[&(e.lemma.as_str(), e.tag.to_string())] == e.form)
            .count();
        let brute = hits as f64 / occurrences.len() as f64;
        ensure((o.token_accuracy - brute).abs() <= 1e-12, || format!("round {round}: {} vs {brute}", o.token_accuracy))?;

        let uniform = Lexicon::from_entries(
            lex.entries().iter().map(|e| LexEntry::new(e.lemma.clone(), e.tag.clone(), e.form.clone(), 7)),
        )
        .unwrap();
        let ou = evaluate(&preds, &uniform).map_err(|e| e.to_string())?;
        ensure((ou.token_accuracy - ou.type_accuracy).abs() <= 1e-12, || "uniform counts: token != type".into())?;
    }
    Ok(Outcome::Pass("500 lexicons".into()))
}

fn table_macro() -> Check {
    let table = common::test_results_table();
    ensure(table.len() == 43, || format!("{} languages", table.len()))?;
    let want_token = ["50.15", "85.04", "85.28", "85.51"];
    let want_type = ["44.37", "82.57", "82.80", "83.41"];
    let mut got = Vec::new();
    for s in 0..4 {
        // Percentages with two decimals are exact fractions of 10000.
        let outcomes: Vec<EvalOutcome> = table
            .iter()
            .map(|(_, v)| {
                let ty = (v[4 + s] * 100.0).round() as usize;
                let tok = (v[s] * 100.0).round() as u64;
                EvalOutcome::new(ty, 10_000, tok, 10_000)
            })
            .collect();
        let (ty, tok) = macro_average(&outcomes).map_err(|e| e.to_string())?;
        let (ty, tok) = (format!("{:.2}", ty * 100.0), format!("{:.2}", tok * 100.0));
        ensure(tok == want_token[s] && ty == want_type[s], || format!("system {s}: token {tok}, type {ty}"))?;
        got.push(tok);
    }
    Ok(Outcome::Pass(format!("token macro {}", got.join(" / "))))
}

fn separation() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    common::separation_split().write_dir(dir.path()).map_err(|e| e.to_string())?;
    let split = DataSplit::read_dir(dir.path()).map_err(|e| e.to_string())?;
    let cfg = SweepConfig {
        temperatures: harness::default_temperatures(),
        model: ModelKind::Rules { context: 3 },
        mode: ModeConfig::Expectation,
        seeds: vec![0],
    };
    let a = run_split("separation", &split, &cfg).map_err(|e| e.to_string())?;
    let b = run_split("separation", &split, &cfg).map_err(|e| e.to_string())?;
    ensure(a == b, || "reruns differ".into())?;
    ensure(a.tau_best.value() > 0.0, || format!("tau-best {}", a.tau_best))?;
    let test_token = |tau: f64| {
        a.cells
            .iter()
            .find(|c| c.tau.value() == tau)
            .map(|c| c.test.token_accuracy)
            .unwrap()
    };
    let (hot, flat) = (test_token(1.0), test_token(0.0));
    ensure(hot > flat, || format!("τ=1 {hot} <= τ=0 {flat}"))?;
    Ok(Outcome::Pass(format!(
        "tau-best {}; test token accuracy τ=1 {hot:.4} > τ=0 {flat:.4}",
        a.tau_best
    )))
}

fn ewt_files() -> Option<Vec<PathBuf>> {
    let dir = std::env::var_os("FREQINFL_EWT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| common::data_dir().join("en_ewt"));
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "conllu"))
        .collect();
    files.sort();
    (!files.is_empty()).then_some(files)
}

fn ewt_copy_baseline() -> Check {
    let Some(files) = ewt_files() else {
        return Ok(Outcome::Skip("no English EWT treebank (set FREQINFL_EWT_DIR)".into()));
    };
    let (lex, _) = harness::ingest(&files, &FilterConfig::default()).map_err(|e| e.to_string())?;
    let cfg = SplitConfig::new([8, 1, 1], harness::split_seed(0)).map_err(|e| e.to_string())?;
    let split = split_lexicon(&lex, &cfg).map_err(|e| e.to_string())?;
    let o = evaluate(&CopyModel.predict_lexicon(&split.test), &split.test).map_err(|e| e.to_string())?;
    let (tok, ty) = (o.token_accuracy * 100.0, o.type_accuracy * 100.0);
    ensure((tok - 82.10).abs() <= 2.5 && (ty - 76.67).abs() <= 2.5, || {
        format!("copy token {tok:.2}, type {ty:.2}")
    })?;
    Ok(Outcome::Pass(format!("copy token {tok:.2}, type {ty:.2}")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("weight arithmetic", weight_arithmetic),
        ("special-case distributions", special_cases),
        ("ratio law and count scaling", ratio_law),
        ("sampler statistics", sampler_statistics),
        ("split properties", split_properties),
        ("metric oracle", metric_oracle),
        ("test-table macro averages", table_macro),
        ("frequency separation", separation),
        ("English EWT copy baseline", ewt_copy_baseline),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(Outcome::Pass(detail)) => println!("PASS {} {name} ({secs:.2}s): {detail}", i + 1),
            Ok(Outcome::Skip(detail)) => println!("SKIP {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
