#![allow(dead_code)]

use std::path::{Path, PathBuf};

use freqinfl::{DataSplit, LexEntry, Lexicon, MorphTag};
use rand::Rng;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

pub fn tag(s: &str) -> MorphTag {
    MorphTag::parse(s).unwrap()
}

/// Random lexicon with up to `max_entries` entries over a handful of lemmas.
pub fn random_lexicon<R: Rng>(rng: &mut R, max_entries: usize, max_count: u64) -> Lexicon {
    let n = rng.gen_range(1..=max_entries);
    let tags = [tag("NOUN|Number=Sing"), tag("NOUN|Number=Plur"), tag("VERB|_")];
    let lemmas = rng.gen_range(1..=n.max(1));
    Lexicon::from_entries((0..n).map(|_| {
        let lemma = format!("l{}", rng.gen_range(0..lemmas));
        let form = match rng.gen_range(0..3) {
            0 => lemma.clone(),
            1 => format!("{lemma}s"),
            _ => format!("{lemma}x{}", rng.gen_range(0..3)),
        };
        LexEntry::new(lemma, tags[rng.gen_range(0..tags.len())].clone(), form, rng.gen_range(1..=max_count))
    }))
    .unwrap()
}

pub const SEPARATION_TAG: &str = "NOUN|Number=Plur";
pub const FREQUENT_TYPES: usize = 5;
pub const FREQUENT_COUNT: u64 = 40;
pub const RARE_TYPES: usize = 20;

/// One part of the frequency-separation lexicon.
///
/// Frequent lemmas (few types, high counts) take the suffix "s"; rare lemmas
/// (many types, count 1) take "en". Every lemma ends in "ab" and has a third
/// to last character unique across all parts, so unseen lemmas are decided by
/// the shared two-character context where the two classes compete.
pub fn separation_part(part: usize) -> Lexicon {
    let t = tag(SEPARATION_TAG);
    let per_part = FREQUENT_TYPES + RARE_TYPES;
    let lemma = |i: usize| {
        let c = char::from_u32(0x100 + (part * per_part + i) as u32).unwrap();
        format!("q{c}ab")
    };
    let frequent = (0..FREQUENT_TYPES).map(|i| {
        let l = lemma(i);
        LexEntry::new(l.clone(), t.clone(), format!("{l}s"), FREQUENT_COUNT)
    });
    let rare = (0..RARE_TYPES).map(|i| {
        let l = lemma(FREQUENT_TYPES + i);
        LexEntry::new(l.clone(), t.clone(), format!("{l}en"), 1)
    });
    Lexicon::from_entries(frequent.chain(rare)).unwrap()
}

pub fn separation_split() -> DataSplit {
    DataSplit {
        train: separation_part(0),
        dev: separation_part(1),
        test: separation_part(2),
        meta: None,
    }
}

/// Per-language token accuracies (percent) for copy, τ=0.0, τ=0.5, τ-best,
/// followed by type accuracies in the same order.
pub fn test_results_table() -> Vec<(String, [f64; 8])> {
    let text = std::fs::read_to_string(data_dir().join("test_results_table.tsv")).unwrap();
    text.lines()
        .skip(1)
        .map(|line| {
            let cols: Vec<&str> = line.split('\t').collect();
            let mut v = [0.0; 8];
            for (i, x) in cols[2..10].iter().enumerate() {
                v[i] = x.parse().unwrap();
            }
            (cols[0].to_owned(), v)
        })
        .collect()
}

/// Dev macro token accuracy (percent) per temperature.
pub const DEV_MACRO_TOKEN: [(f64, f64); 19] = [
    (-1.0, 84.58),
    (-0.8, 84.80),
    (-0.6, 85.00),
    (-0.5, 85.14),
    (-0.4, 85.22),
    (-0.3, 85.36),
    (-0.2, 85.47),
    (-0.1, 85.58),
    (0.0, 85.58),
    (0.1, 85.78),
    (0.2, 85.86),
    (0.3, 85.90),
    (0.4, 85.97),
    (0.5, 86.02),
    (0.6, 85.98),
    (0.8, 85.78),
    (1.0, 85.17),
    (1.1, 84.76),
    (2.0, 17.54),
];
