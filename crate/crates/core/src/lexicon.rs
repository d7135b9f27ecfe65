//! Frequency-annotated lexicons of lemma-tag-form triples.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::conllu::{Sentence, TokenRecord};
use crate::error::{Error, Result};

pub const TSV_HEADER: &str = "lemma\ttag\tform\tcount";

/// A morphological tag in canonical form: `UPOS|Key=Val|Key=Val` with
/// features sorted by key, or `UPOS|_` without features.
///
/// The canonical string is the identity, so ordering is byte order of the
/// serialized tag.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MorphTag(String);

impl MorphTag {
    pub fn new(upos: &str, feats: &[(String, String)]) -> Self {
        let mut sorted: Vec<_> = feats.iter().collect();
        sorted.sort();
        let feats = if sorted.is_empty() {
            "_".to_owned()
        } else {
            sorted
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join("|")
        };
        MorphTag(format!("{upos}|{feats}"))
    }

    pub fn from_record(token: &TokenRecord) -> Self {
        MorphTag::new(&token.upos, &token.feats)
    }

    /// Parse a serialized tag, rejecting non-canonical spellings.
    pub fn parse(s: &str) -> Result<Self> {
        let (upos, feats) = s
            .split_once('|')
            .ok_or_else(|| Error::Domain(format!("tag `{s}` has no UPOS|FEATS separator")))?;
        let pairs = if feats == "_" {
            Vec::new()
        } else {
            feats
                .split('|')
                .map(|p| {
                    p.split_once('=')
                        .map(|(k, v)| (k.to_owned(), v.to_owned()))
                        .ok_or_else(|| Error::Domain(format!("tag `{s}`: bad feature `{p}`")))
                })
                .collect::<Result<Vec<_>>>()?
        };
        let tag = MorphTag::new(upos, &pairs);
        if tag.0 != s {
            return Err(Error::Domain(format!(
                "tag `{s}` is not canonical (expected `{}`)",
                tag.0
            )));
        }
        Ok(tag)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn upos(&self) -> &str {
        self.0.split_once('|').map_or(&self.0, |(u, _)| u)
    }

    /// Serialized feature bundle, `_` when empty.
    pub fn feats(&self) -> &str {
        self.0.split_once('|').map_or("_", |(_, f)| f)
    }
}

impl fmt::Display for MorphTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One lemma-tag-form triple and its corpus occurrence count.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LexEntry {
    pub lemma: String,
    pub tag: MorphTag,
    pub form: String,
    pub count: u64,
}

impl LexEntry {
    pub fn new(lemma: impl Into<String>, tag: MorphTag, form: impl Into<String>, count: u64) -> Self {
        LexEntry {
            lemma: lemma.into(),
            tag,
            form: form.into(),
            count,
        }
    }

    pub fn key(&self) -> (&str, &MorphTag, &str) {
        (&self.lemma, &self.tag, &self.form)
    }
}

type Key = (String, MorphTag, String);

/// A set of unique triples, sorted by `(lemma, tag, form)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: Vec<LexEntry>,
    token_mass: u64,
}

impl Lexicon {
    pub fn new() -> Self {
        Lexicon::default()
    }

    /// Build a lexicon, summing the counts of repeated triples.
    ///
    /// Fails if any entry has a zero count.
    pub fn from_entries<I: IntoIterator<Item = LexEntry>>(entries: I) -> Result<Self> {
        let mut counts: BTreeMap<Key, u64> = BTreeMap::new();
        for e in entries {
            if e.count == 0 {
                return Err(Error::Domain(format!(
                    "entry ({}, {}, {}) has count 0",
                    e.lemma, e.tag, e.form
                )));
            }
            *counts.entry((e.lemma, e.tag, e.form)).or_default() += e.count;
        }
        Ok(Self::from_counts(counts))
    }

    fn from_counts(counts: BTreeMap<Key, u64>) -> Self {
        let entries: Vec<LexEntry> = counts
            .into_iter()
            .map(|((lemma, tag, form), count)| LexEntry {
                lemma,
                tag,
                form,
                count,
            })
            .collect();
        let token_mass = entries.iter().map(|e| e.count).sum();
        let lex = Lexicon {
            entries,
            token_mass,
        };
        debug_assert!(lex.invariants_hold());
        lex
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    /// Total occurrence count over all entries.
    pub fn token_mass(&self) -> u64 {
        self.token_mass
    }

    /// Number of unique triples.
    pub fn type_count(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_count(&self) -> Option<u64> {
        self.entries.iter().map(|e| e.count).max()
    }

    pub fn lemmas(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.lemma.as_str()).collect()
    }

    pub fn get(&self, lemma: &str, tag: &MorphTag, form: &str) -> Option<&LexEntry> {
        self.entries
            .binary_search_by(|e| e.key().cmp(&(lemma, tag, form)))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Check the aggregate fields against the entries.
    pub fn invariants_hold(&self) -> bool {
        self.token_mass == self.entries.iter().map(|e| e.count).sum::<u64>()
            && self.entries.windows(2).all(|w| w[0].key() < w[1].key())
            && self.entries.iter().all(|e| e.count >= 1)
    }

    /// Sum the counts of two lexicons. Associative and commutative.
    pub fn merge(&self, other: &Lexicon) -> Lexicon {
        let mut counts: BTreeMap<Key, u64> = BTreeMap::new();
        for e in self.entries.iter().chain(&other.entries) {
            *counts
                .entry((e.lemma.clone(), e.tag.clone(), e.form.clone()))
                .or_default() += e.count;
        }
        Self::from_counts(counts)
    }

    /// Multiply every count by `k` (k ≥ 1).
    pub fn scaled(&self, k: u64) -> Lexicon {
        assert!(k >= 1, "scale factor must be positive");
        let entries = self
            .entries
            .iter()
            .map(|e| LexEntry {
                count: e.count * k,
                ..e.clone()
            })
            .collect();
        Lexicon {
            entries,
            token_mass: self.token_mass * k,
        }
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TSV_HEADER}")?;
        for e in &self.entries {
            writeln!(w, "{}\t{}\t{}\t{}", e.lemma, e.tag, e.form, e.count)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_tsv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("lexicon fields are UTF-8")
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Lexicon> {
        let mut counts: BTreeMap<Key, u64> = BTreeMap::new();
        let mut offset = 0u64;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| match e.kind() {
                std::io::ErrorKind::InvalidData => Error::Decode {
                    line: line_no,
                    offset,
                },
                _ => Error::Io(e),
            })?;
            let line_offset = offset;
            offset += line.len() as u64 + 1;
            if idx == 0 {
                if line != TSV_HEADER {
                    return Err(Error::parse(line_no, 0, format!("expected header `{TSV_HEADER}`")));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    line_no,
                    line_offset,
                    format!("expected 4 columns, found {}", fields.len()),
                ));
            }
            let tag = MorphTag::parse(fields[1])
                .map_err(|e| Error::parse(line_no, line_offset, e.to_string()))?;
            let count: u64 = fields[3]
                .parse()
                .ok()
                .filter(|&c| c >= 1)
                .ok_or_else(|| Error::parse(line_no, line_offset, "count must be a positive integer"))?;
            let key = (fields[0].to_owned(), tag, fields[2].to_owned());
            if counts.insert(key, count).is_some() {
                return Err(Error::parse(line_no, line_offset, "duplicate entry"));
            }
        }
        Ok(Self::from_counts(counts))
    }

    pub fn read_tsv_file(path: impl AsRef<Path>) -> Result<Lexicon> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::file(path, e))?;
        Lexicon::read_tsv(BufReader::new(file)).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn write_tsv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::file(path, e))?;
        self.write_tsv(BufWriter::new(file))
    }

    /// SHA-256 of the TSV serialization, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_tsv_string().as_bytes()))
    }
}

/// Token filtering applied during lexicalization.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FilterConfig {
    /// Lowercase lemma and form.
    pub lowercase: bool,
    /// UPOS classes to exclude.
    pub drop_upos: BTreeSet<String>,
}

impl FilterConfig {
    fn keep(&self, token: &TokenRecord) -> bool {
        !matches!(token.lemma.as_str(), "" | "_")
            && !matches!(token.form.as_str(), "" | "_")
            && !self.drop_upos.contains(&token.upos)
    }
}

/// Aggregate surviving tokens into unique triples with occurrence counts.
pub fn lexicalize(sentences: &[Sentence], filter: &FilterConfig) -> Lexicon {
    let mut counts: BTreeMap<Key, u64> = BTreeMap::new();
    for token in sentences.iter().flatten().filter(|t| filter.keep(t)) {
        let (lemma, form) = if filter.lowercase {
            (token.lemma.to_lowercase(), token.form.to_lowercase())
        } else {
            (token.lemma.clone(), token.form.clone())
        };
        *counts
            .entry((lemma, MorphTag::from_record(token), form))
            .or_default() += 1;
    }
    Lexicon::from_counts(counts)
}
