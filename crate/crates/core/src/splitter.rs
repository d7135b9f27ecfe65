//! Frequency-weighted, lemma-disjoint train/dev/test splitting.
//!
//! Lemmas are the unit of assignment. Train lemmas are drawn without
//! replacement with probability proportional to their total occurrence
//! count until the train target is reached; dev lemmas are then drawn
//! uniformly from the remainder until the dev target is reached; whatever
//! is left becomes test. Targets are measured in token mass and the draw
//! that first reaches a target is kept (overshoot is never rolled back).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lexicon::{LexEntry, Lexicon};
use crate::rng::{self, SeededRng};

pub const TRAIN_FILE: &str = "train.tsv";
pub const DEV_FILE: &str = "dev.tsv";
pub const TEST_FILE: &str = "test.tsv";
pub const META_FILE: &str = "split-meta.txt";

/// All entries of one lemma and their summed count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LemmaGroup {
    pub lemma: String,
    pub entries: Vec<LexEntry>,
    pub mass: u64,
}

/// Group a lexicon's entries by lemma, in lemma order.
pub fn group_by_lemma(lexicon: &Lexicon) -> Result<Vec<LemmaGroup>> {
    if lexicon.is_empty() {
        return Err(Error::EmptyInput("group_by_lemma"));
    }
    let mut groups: Vec<LemmaGroup> = Vec::new();
    // Entries are sorted by lemma first, so groups are contiguous.
    for e in lexicon.entries() {
        match groups.last_mut() {
            Some(g) if g.lemma == e.lemma => {
                g.mass += e.count;
                g.entries.push(e.clone());
            }
            _ => groups.push(LemmaGroup {
                lemma: e.lemma.clone(),
                entries: vec![e.clone()],
                mass: e.count,
            }),
        }
    }
    Ok(groups)
}

/// Split proportions as integer parts (8:1:1 by default) and the seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitConfig {
    pub ratios: [u64; 3],
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratios: [8, 1, 1],
            seed: 0,
        }
    }
}

impl SplitConfig {
    pub fn new(ratios: [u64; 3], seed: u64) -> Result<Self> {
        let cfg = SplitConfig { ratios, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse `a:b:c`.
    pub fn parse_ratios(s: &str) -> Result<[u64; 3]> {
        let parts: Vec<u64> = s
            .split(':')
            .map(|p| p.trim().parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("ratios `{s}` must be three integers a:b:c")))?;
        let ratios: [u64; 3] = parts
            .try_into()
            .map_err(|_| Error::Config(format!("ratios `{s}` must have exactly three parts")))?;
        SplitConfig { ratios, seed: 0 }.validate()?;
        Ok(ratios)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ratios.contains(&0) {
            return Err(Error::Config("split ratios must be positive".into()));
        }
        if self.ratios.iter().try_fold(0u64, |a, &r| a.checked_add(r)).is_none() {
            return Err(Error::Config("split ratios overflow".into()));
        }
        Ok(())
    }

    fn denominator(&self) -> u64 {
        self.ratios.iter().sum()
    }

    pub fn fraction(&self, part: usize) -> f64 {
        self.ratios[part] as f64 / self.denominator() as f64
    }

    /// `mass >= fraction(part) * total`, evaluated exactly.
    fn reached(&self, part: usize, mass: u64, total: u64) -> bool {
        mass as u128 * self.denominator() as u128 >= self.ratios[part] as u128 * total as u128
    }

    pub fn ratios_string(&self) -> String {
        format!("{}:{}:{}", self.ratios[0], self.ratios[1], self.ratios[2])
    }
}

/// Provenance of a split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitMeta {
    pub config: SplitConfig,
    pub source_digest: String,
    pub source_mass: u64,
    pub masses: [u64; 3],
    pub lemmas: [usize; 3],
    pub types: [usize; 3],
    pub warnings: Vec<String>,
}

impl SplitMeta {
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let names = ["train", "dev", "test"];
        writeln!(s, "seed={}", self.config.seed).unwrap();
        writeln!(s, "ratios={}", self.config.ratios_string()).unwrap();
        writeln!(s, "rng={}", rng::RNG_NAME).unwrap();
        writeln!(s, "source_digest={}", self.source_digest).unwrap();
        writeln!(s, "source_mass={}", self.source_mass).unwrap();
        for (i, name) in names.iter().enumerate() {
            writeln!(s, "{name}_mass={}", self.masses[i]).unwrap();
            writeln!(s, "{name}_lemmas={}", self.lemmas[i]).unwrap();
            writeln!(s, "{name}_types={}", self.types[i]).unwrap();
        }
        for w in &self.warnings {
            writeln!(s, "warning={w}").unwrap();
        }
        s
    }
}

/// Three lemma-disjoint lexicons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataSplit {
    pub train: Lexicon,
    pub dev: Lexicon,
    pub test: Lexicon,
    pub meta: Option<SplitMeta>,
}

impl DataSplit {
    pub fn parts(&self) -> [&Lexicon; 3] {
        [&self.train, &self.dev, &self.test]
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
        self.train.write_tsv_file(dir.join(TRAIN_FILE))?;
        self.dev.write_tsv_file(dir.join(DEV_FILE))?;
        self.test.write_tsv_file(dir.join(TEST_FILE))?;
        if let Some(meta) = &self.meta {
            let path = dir.join(META_FILE);
            fs::write(&path, meta.to_key_values()).map_err(|e| Error::file(path, e))?;
        }
        Ok(())
    }

    /// Read `train.tsv`, `dev.tsv` and `test.tsv` from a directory.
    /// The metadata file is not parsed back.
    pub fn read_dir(dir: impl AsRef<Path>) -> Result<DataSplit> {
        let dir = dir.as_ref();
        Ok(DataSplit {
            train: Lexicon::read_tsv_file(dir.join(TRAIN_FILE))?,
            dev: Lexicon::read_tsv_file(dir.join(DEV_FILE))?,
            test: Lexicon::read_tsv_file(dir.join(TEST_FILE))?,
            meta: None,
        })
    }
}

/// Prefix sums over group masses supporting removal and sampling by
/// cumulative mass.
struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new(values: &[u64]) -> Self {
        let mut tree = vec![0; values.len() + 1];
        for (i, &v) in values.iter().enumerate() {
            let mut j = i + 1;
            while j < tree.len() {
                tree[j] += v;
                j += j & j.wrapping_neg();
            }
        }
        Fenwick { tree }
    }

    fn subtract(&mut self, idx: usize, v: u64) {
        let mut j = idx + 1;
        while j < self.tree.len() {
            self.tree[j] -= v;
            j += j & j.wrapping_neg();
        }
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn find(&self, mut target: u64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

/// Split a lexicon into lemma-disjoint train/dev/test parts.
pub fn split_lexicon(lexicon: &Lexicon, config: &SplitConfig) -> Result<DataSplit> {
    config.validate()?;
    if lexicon.is_empty() {
        return Err(Error::InsufficientLemmas { found: 0 });
    }
    let groups = group_by_lemma(lexicon)?;
    if groups.len() < 3 {
        return Err(Error::InsufficientLemmas {
            found: groups.len(),
        });
    }

    let total = lexicon.token_mass();
    let mut rng: SeededRng = rng::seeded(config.seed);
    let mut warnings = Vec::new();
    let mut assigned = vec![usize::MAX; groups.len()];

    for g in &groups {
        if g.mass as u128 * config.denominator() as u128 > config.ratios[0] as u128 * total as u128 {
            warnings.push(format!(
                "lemma `{}` (mass {}) alone exceeds the train target",
                g.lemma, g.mass
            ));
        }
    }

    // Train: draws proportional to lemma mass, without replacement.
    let masses: Vec<u64> = groups.iter().map(|g| g.mass).collect();
    let mut fenwick = Fenwick::new(&masses);
    let mut remaining_mass = total;
    let mut train_mass = 0u64;
    while !config.reached(0, train_mass, total) && remaining_mass > 0 {
        let r = rng.gen_range(0..remaining_mass);
        let idx = fenwick.find(r);
        debug_assert_eq!(assigned[idx], usize::MAX);
        assigned[idx] = 0;
        fenwick.subtract(idx, masses[idx]);
        remaining_mass -= masses[idx];
        train_mass += masses[idx];
    }

    // Dev: uniform draws among the remaining lemmas.
    let mut rest: Vec<usize> = (0..groups.len()).filter(|&i| assigned[i] == usize::MAX).collect();
    let mut dev_mass = 0u64;
    while !config.reached(1, dev_mass, total) && !rest.is_empty() {
        let j = rng.gen_range(0..rest.len());
        let idx = rest.swap_remove(j);
        assigned[idx] = 1;
        dev_mass += masses[idx];
    }
    for idx in rest {
        assigned[idx] = 2;
    }

    let mut parts: [Vec<LexEntry>; 3] = Default::default();
    let mut lemmas = [0usize; 3];
    for (g, &part) in groups.into_iter().zip(&assigned) {
        lemmas[part] += 1;
        parts[part].extend(g.entries);
    }
    let [train, dev, test] = parts.map(|p| Lexicon::from_entries(p).expect("counts are positive"));

    for (name, lex) in [("dev", &dev), ("test", &test)] {
        if lex.is_empty() {
            warnings.push(format!("{name} split is empty"));
        }
    }

    let meta = SplitMeta {
        config: *config,
        source_digest: lexicon.digest(),
        source_mass: total,
        masses: [train.token_mass(), dev.token_mass(), test.token_mass()],
        lemmas,
        types: [train.type_count(), dev.type_count(), test.type_count()],
        warnings,
    };

    Ok(DataSplit {
        train,
        dev,
        test,
        meta: Some(meta),
    })
}
