//! Corpus-frequency temperature weighting.
//!
//! An entry with occurrence count `c` gets sample weight `c^τ`; sampling
//! probabilities are the weights normalized over the lexicon. `τ = 0` is
//! uniform over types, `τ = 1` follows raw corpus frequency, negative `τ`
//! favors rare entries.

use std::fmt;

use rand::distributions::{Distribution, WeightedIndex};

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::rng;

/// Largest allowed ratio between the biggest and smallest weight.
pub const MAX_WEIGHT_RATIO: f64 = 1e300;

/// Corpus-frequency temperature. Any finite value is accepted.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(tau: f64) -> Result<Self> {
        if tau.is_finite() {
            Ok(Temperature(tau))
        } else {
            Err(Error::Domain(format!("temperature {tau} is not finite")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Temperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // One decimal for grid values (0.0, -0.5), shortest exact form otherwise.
        let v = if self.0 == 0.0 { 0.0 } else { self.0 };
        let short = format!("{v:.1}");
        if short.parse::<f64>() == Ok(v) {
            f.write_str(&short)
        } else {
            write!(f, "{v}")
        }
    }
}

impl std::str::FromStr for Temperature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tau: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("invalid temperature `{s}`")))?;
        Temperature::new(tau)
    }
}

/// Per-count sample weights `count^tau`.
pub fn compute_weights(counts: &[u64], tau: Temperature) -> Result<Vec<f64>> {
    let mut weights = Vec::with_capacity(counts.len());
    for (i, &c) in counts.iter().enumerate() {
        if c == 0 {
            return Err(Error::Domain(format!("count at index {i} is zero")));
        }
        let w = (c as f64).powf(tau.0);
        if !w.is_finite() || w <= 0.0 {
            return Err(Error::NumericRange {
                entry: format!("index {i} (count {c})"),
                detail: format!("weight {c}^{} = {w} is not a positive finite number", tau.0),
            });
        }
        weights.push(w);
    }
    Ok(weights)
}

/// Normalized sampling distribution over a lexicon's entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingDistribution {
    /// Indices into `Lexicon::entries()`.
    pub entry_ids: Vec<usize>,
    pub weights: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl SamplingDistribution {
    pub fn from_counts(counts: &[u64], tau: Temperature) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyInput("sampling distribution"));
        }
        let weights = compute_weights(counts, tau)?;

        let (mut lo, mut hi) = (0, 0);
        for (i, &w) in weights.iter().enumerate() {
            if w < weights[lo] {
                lo = i;
            }
            if w > weights[hi] {
                hi = i;
            }
        }
        let ratio = weights[hi] / weights[lo];
        if ratio.is_nan() || ratio > MAX_WEIGHT_RATIO {
            let culprit = if tau.0 >= 0.0 { lo } else { hi };
            return Err(Error::NumericRange {
                entry: format!("index {culprit} (count {})", counts[culprit]),
                detail: format!("weight ratio {ratio:e} exceeds {MAX_WEIGHT_RATIO:e} at tau {}", tau.0),
            });
        }

        let total: f64 = weights.iter().sum();
        if !total.is_finite() {
            return Err(Error::NumericRange {
                entry: format!("index {hi} (count {})", counts[hi]),
                detail: format!("sum of weights overflows at tau {}", tau.0),
            });
        }
        let probabilities = weights.iter().map(|w| w / total).collect();
        Ok(SamplingDistribution {
            entry_ids: (0..counts.len()).collect(),
            weights,
            probabilities,
        })
    }

    pub fn len(&self) -> usize {
        self.entry_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entry_ids.is_empty()
    }
}

/// Sampling distribution for a lexicon at temperature `tau`.
pub fn distribution(lexicon: &Lexicon, tau: Temperature) -> Result<SamplingDistribution> {
    if lexicon.is_empty() {
        return Err(Error::EmptyInput("sampling distribution"));
    }
    let counts: Vec<u64> = lexicon.entries().iter().map(|e| e.count).collect();
    SamplingDistribution::from_counts(&counts, tau).map_err(|e| match e {
        Error::NumericRange { entry, detail } => {
            let named = entry
                .strip_prefix("index ")
                .and_then(|s| s.split(' ').next())
                .and_then(|s| s.parse::<usize>().ok())
                .map(|i| {
                    let ent = &lexicon.entries()[i];
                    format!("({}, {}, {}) {}", ent.lemma, ent.tag, ent.form, entry)
                })
                .unwrap_or(entry);
            Error::NumericRange { entry: named, detail }
        }
        other => other,
    })
}

/// Draw `n` entry ids with replacement.
pub fn draw(dist: &SamplingDistribution, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::Domain("number of draws must be positive".into()));
    }
    if dist.is_empty() {
        return Err(Error::EmptyInput("draw"));
    }
    let index = WeightedIndex::new(&dist.probabilities)
        .map_err(|e| Error::Domain(format!("invalid sampling distribution: {e}")))?;
    let mut rng = rng::seeded(seed);
    Ok((0..n).map(|_| dist.entry_ids[index.sample(&mut rng)]).collect())
}
