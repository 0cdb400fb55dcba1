//! Concept specificity counts and their rank distributions.
//!
//! For a concept `v` in corpus `C`:
//! * s-specificity: tokens whose lemma is `v`;
//! * c-specificity: tokens whose lemma is a compound with `v` as a component;
//! * mu: the sum of both.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compounds::{compound_analysis, upper_first, Lexicon};
use crate::corpus::CorpusIndex;

const DEFAULT_CONCEPTS: &str = include_str!("../data/concepts.txt");

#[derive(Debug, Error)]
pub enum SpecificityError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("duplicate concept `{0}`")]
    DuplicateConcept(String),
    #[error("empty concept entry")]
    EmptyConcept,
    #[error("unknown variant `{0}` (expected mu, c_only or s_only)")]
    UnknownVariant(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptSet {
    concepts: Vec<String>,
    pub source: String,
}

impl ConceptSet {
    pub fn new<I, S>(concepts: I, source: impl Into<String>) -> Result<Self, SpecificityError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for c in concepts {
            let c: String = c.into();
            if c.trim().is_empty() {
                return Err(SpecificityError::EmptyConcept);
            }
            if !seen.insert(c.clone()) {
                return Err(SpecificityError::DuplicateConcept(c));
            }
            list.push(c);
        }
        Ok(ConceptSet {
            concepts: list,
            source: source.into(),
        })
    }

    pub fn parse(text: &str, source: impl Into<String>) -> Result<Self, SpecificityError> {
        ConceptSet::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
            source,
        )
    }

    pub fn load(path: &Path) -> Result<Self, SpecificityError> {
        let text = fs::read_to_string(path).map_err(|source| SpecificityError::Io {
            path: path.display().to_string(),
            source,
        })?;
        ConceptSet::parse(&text, path.display().to_string())
    }

    /// The 63 bundled business-education concepts.
    pub fn bundled() -> Self {
        ConceptSet::parse(DEFAULT_CONCEPTS, "bundled").expect("bundled concept list is valid")
    }

    pub fn concepts(&self) -> &[String] {
        &self.concepts
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecificityRecord {
    pub concept: String,
    pub s_count: u64,
    pub c_count: u64,
    pub mu: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Mu,
    COnly,
    SOnly,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Mu, Variant::COnly, Variant::SOnly];

    pub fn select(self, record: &SpecificityRecord) -> u64 {
        match self {
            Variant::Mu => record.mu,
            Variant::COnly => record.c_count,
            Variant::SOnly => record.s_count,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Mu => "mu",
            Variant::COnly => "c_only",
            Variant::SOnly => "s_only",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = SpecificityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mu" => Ok(Variant::Mu),
            "c_only" | "c" => Ok(Variant::COnly),
            "s_only" | "s" => Ok(Variant::SOnly),
            other => Err(SpecificityError::UnknownVariant(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub concept: String,
    pub raw_count: u64,
    pub per_million: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDistribution {
    pub corpus_id: String,
    pub variant: Variant,
    pub entries: Vec<RankEntry>,
}

impl RankDistribution {
    pub fn per_million(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.per_million).collect()
    }

    pub fn raw_counts(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.raw_count).collect()
    }
}

/// Lower-cased spelling a component surface of `concept` must contain.
fn surface_probe(concept: &str) -> String {
    let lower = concept.to_lowercase();
    match lower.strip_suffix('e') {
        Some(stem) if !stem.is_empty() => stem.to_string(),
        _ => lower,
    }
}

/// s-, c- and combined specificity for every concept, in concept-set order.
pub fn specificity(
    index: &CorpusIndex,
    concepts: &ConceptSet,
    lexicon: &Lexicon,
) -> Vec<SpecificityRecord> {
    let mut by_key: HashMap<String, Vec<usize>> = HashMap::new();
    for (i, c) in concepts.concepts().iter().enumerate() {
        by_key.entry(upper_first(c)).or_default().push(i);
    }
    let probes: Vec<String> = concepts.concepts().iter().map(|c| surface_probe(c)).collect();

    let c_counts = index
        .lemma_counts
        .par_iter()
        .filter_map(|(word, &count)| {
            let lower = word.to_lowercase();
            if !probes.iter().any(|p| lower.contains(p.as_str())) {
                return None;
            }
            let seg = compound_analysis(word, lexicon)?;
            let mut hits: Vec<usize> = seg
                .parts
                .iter()
                .filter_map(|p| by_key.get(&upper_first(&p.component)))
                .flatten()
                .copied()
                .collect();
            hits.sort_unstable();
            hits.dedup();
            Some((hits, count))
        })
        .fold(
            || vec![0u64; concepts.len()],
            |mut acc, (hits, count)| {
                for i in hits {
                    acc[i] += count;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; concepts.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    concepts
        .concepts()
        .iter()
        .zip(c_counts)
        .map(|(concept, c_count)| {
            let s_count = index.count(concept);
            SpecificityRecord {
                concept: concept.clone(),
                s_count,
                c_count,
                mu: s_count + c_count,
            }
        })
        .collect()
}

/// Per-million rank distribution of one variant, descending; ties ordered by
/// concept. Zero counts stay at the tail.
pub fn rank_distribution(
    corpus_id: &str,
    records: &[SpecificityRecord],
    variant: Variant,
    total_tokens: u64,
) -> Result<RankDistribution, SpecificityError> {
    if total_tokens == 0 {
        return Err(SpecificityError::EmptyCorpus);
    }
    let mut entries: Vec<RankEntry> = records
        .iter()
        .map(|r| {
            let raw = variant.select(r);
            RankEntry {
                concept: r.concept.clone(),
                raw_count: raw,
                per_million: raw as f64 / total_tokens as f64 * 1_000_000.0,
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        b.raw_count
            .cmp(&a.raw_count)
            .then_with(|| a.concept.cmp(&b.concept))
    });
    Ok(RankDistribution {
        corpus_id: corpus_id.to_string(),
        variant,
        entries,
    })
}
