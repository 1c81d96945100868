//! Empirical class distribution p(𝒞(T)) and the per-prefix node probabilities
//! used to walk the ontology tree during sampling.

mod alg;
mod table;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantic_space::{extract_type, EntityId, OntologyTree, SemType};

pub use alg::{assign_probabilities, NodeProbabilities};
pub use table::{class_interval, CodingTable, NodeId};

pub const DISTRIBUTION_FILE_VERSION: u32 = 1;

/// Longest type kept by default; longer corpus types are dropped.
pub const DEFAULT_MAX_TYPE_LEN: u32 = 4;

#[derive(Debug, Error)]
pub enum DistributionError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("corpus has no record with at most {0} entities")]
    NothingUnderCap(u32),
    #[error("record {record} refers to unknown entity {entity}")]
    UnknownEntity { record: usize, entity: EntityId },
    #[error("unknown entity path {0:?}")]
    UnknownPath(String),
    #[error("malformed distribution file at line {line}, column {column} (field `{field}`): {message}")]
    Parse {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("unsupported distribution file version {0}")]
    Version(u32),
    #[error("entry {0} has a zero count")]
    ZeroCount(usize),
    #[error("entry {0} repeats an earlier type")]
    DuplicateType(usize),
    #[error("declared total {declared} does not match the sum of counts {actual}")]
    TotalMismatch { declared: u64, actual: u64 },
    #[error("dead prefix: no supported type continues this prefix")]
    DeadPrefix,
    #[error("unknown class: type has zero probability")]
    UnknownClass,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Empirical probability over types with nonzero support, kept as exact
/// occurrence counts. `p(T) = count(T) / total`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDistribution {
    entries: BTreeMap<SemType, u64>,
    total: u64,
    max_type_len: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionFile {
    version: u32,
    total: u64,
    #[serde(default = "default_cap")]
    max_type_len: u32,
    entries: Vec<EntryRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRecord {
    #[serde(rename = "type")]
    sem_type: BTreeMap<String, u32>,
    count: u64,
}

fn default_cap() -> u32 {
    DEFAULT_MAX_TYPE_LEN
}

/// Frequency estimate from per-sentence types, capped at
/// [`DEFAULT_MAX_TYPE_LEN`].
/// Types of the non-blank lines of a one-sentence-per-line corpus.
pub fn corpus_records(corpus: &str, tree: &OntologyTree) -> Vec<SemType> {
    corpus
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| extract_type(l, tree))
        .collect()
}

pub fn build_distribution(records: &[SemType], tree: &OntologyTree) -> Result<ClassDistribution, DistributionError> {
    ClassDistribution::from_records(records, tree, DEFAULT_MAX_TYPE_LEN)
}

impl ClassDistribution {
    /// Counts identical records. Types longer than `max_type_len` are dropped
    /// and the rest renormalised.
    pub fn from_records(records: &[SemType], tree: &OntologyTree, max_type_len: u32) -> Result<Self, DistributionError> {
        if records.is_empty() {
            return Err(DistributionError::EmptyCorpus);
        }
        let mut entries: BTreeMap<SemType, u64> = BTreeMap::new();
        for (i, t) in records.iter().enumerate() {
            if let Some((entity, _)) = t.iter().find(|(id, _)| !tree.contains(*id)) {
                return Err(DistributionError::UnknownEntity { record: i, entity });
            }
            if t.len() <= max_type_len {
                *entries.entry(t.clone()).or_insert(0) += 1;
            }
        }
        Self::from_entries(entries, max_type_len)
    }

    /// Builds from explicit `(type, count)` pairs. Zero counts are rejected;
    /// over-long types are dropped.
    pub fn from_counts<I>(counts: I, tree: &OntologyTree, max_type_len: u32) -> Result<Self, DistributionError>
    where
        I: IntoIterator<Item = (SemType, u64)>,
    {
        let mut entries = BTreeMap::new();
        for (i, (t, n)) in counts.into_iter().enumerate() {
            if n == 0 {
                return Err(DistributionError::ZeroCount(i));
            }
            if let Some((entity, _)) = t.iter().find(|(id, _)| !tree.contains(*id)) {
                return Err(DistributionError::UnknownEntity { record: i, entity });
            }
            if t.len() <= max_type_len && entries.insert(t, n).is_some() {
                return Err(DistributionError::DuplicateType(i));
            }
        }
        Self::from_entries(entries, max_type_len)
    }

    fn from_entries(entries: BTreeMap<SemType, u64>, max_type_len: u32) -> Result<Self, DistributionError> {
        if entries.is_empty() {
            return Err(DistributionError::NothingUnderCap(max_type_len));
        }
        let total = entries.values().sum();
        Ok(ClassDistribution {
            entries,
            total,
            max_type_len,
        })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn max_type_len(&self) -> u32 {
        self.max_type_len
    }

    pub fn count(&self, t: &SemType) -> u64 {
        self.entries.get(t).copied().unwrap_or(0)
    }

    pub fn contains(&self, t: &SemType) -> bool {
        self.entries.contains_key(t)
    }

    /// Exact p(𝒞(t)); zero when unsupported.
    pub fn probability(&self, t: &SemType) -> BigRational {
        BigRational::new(BigInt::from(self.count(t)), BigInt::from(self.total))
    }

    /// Supported types with their counts, in `SemType` order.
    pub fn entries(&self) -> impl Iterator<Item = (&SemType, u64)> + '_ {
        self.entries.iter().map(|(t, &n)| (t, n))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// Shannon entropy of the class distribution in bits.
    pub fn entropy_bits(&self) -> f64 {
        let total = self.total as f64;
        self.entries
            .values()
            .map(|&n| {
                let p = n as f64 / total;
                -p * p.log2()
            })
            .sum()
    }

    pub fn to_json(&self, tree: &OntologyTree) -> String {
        let file = DistributionFile {
            version: DISTRIBUTION_FILE_VERSION,
            total: self.total,
            max_type_len: self.max_type_len,
            entries: self
                .entries
                .iter()
                .map(|(t, &count)| EntryRecord {
                    sem_type: t
                        .iter()
                        .map(|(id, n)| (tree.entity(id).path().to_string(), n))
                        .collect(),
                    count,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("distribution serializes");
        s.push('\n');
        s
    }

    /// Parses the distribution file; probabilities are rebuilt from counts.
    pub fn parse_json(text: &str, tree: &OntologyTree) -> Result<Self, DistributionError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: DistributionFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            DistributionError::Parse {
                line: inner.line(),
                column: inner.column(),
                field,
                message: inner.to_string(),
            }
        })?;
        if file.version != DISTRIBUTION_FILE_VERSION {
            return Err(DistributionError::Version(file.version));
        }
        let mut counts = Vec::with_capacity(file.entries.len());
        for entry in file.entries {
            let mut t = SemType::new();
            for (path, n) in entry.sem_type {
                let id = tree.lookup_path(&path).ok_or(DistributionError::UnknownPath(path))?;
                t.add_entity(id, n);
            }
            counts.push((t, entry.count));
        }
        let actual: u64 = counts.iter().map(|(_, n)| n).sum();
        if actual != file.total {
            return Err(DistributionError::TotalMismatch {
                declared: file.total,
                actual,
            });
        }
        Self::from_counts(counts, tree, file.max_type_len)
    }

    pub fn load(path: impl AsRef<Path>, tree: &OntologyTree) -> Result<Self, DistributionError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DistributionError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_json(&text, tree)
    }

    pub fn save(&self, path: impl AsRef<Path>, tree: &OntologyTree) -> Result<(), DistributionError> {
        let path = path.as_ref();
        fs::write(path, self.to_json(tree)).map_err(|source| DistributionError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    pub(crate) fn ab_tree() -> OntologyTree {
        OntologyTree::from_entries(vec![("X/Y/a", vec!["aa"]), ("X/Y/b", vec!["bb"])]).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn frequency_counting() {
        let tree = ab_tree();
        let (a, b) = (SemType::from_entities([EntityId(0)]), SemType::from_entities([EntityId(1)]));
        let dist = build_distribution(&[a.clone(), a.clone(), b.clone(), SemType::new()], &tree).unwrap();
        assert_eq!(dist.probability(&a), r(1, 2));
        assert_eq!(dist.probability(&b), r(1, 4));
        assert_eq!(dist.probability(&SemType::new()), r(1, 4));
        let sum: BigRational = dist.entries().map(|(t, _)| dist.probability(t)).sum();
        assert!(sum.is_one());
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(build_distribution(&[], &ab_tree()), Err(DistributionError::EmptyCorpus)));
    }

    #[test]
    fn point_mass() {
        let tree = ab_tree();
        let a = SemType::from_entities([EntityId(0)]);
        let dist = build_distribution(&vec![a.clone(); 1000], &tree).unwrap();
        assert!(dist.probability(&a).is_one());
        assert_eq!(dist.entropy_bits(), 0.0);
        assert!(dist.probability(&SemType::new()).is_zero());
    }

    #[test]
    fn unknown_entity_is_rejected() {
        let bad = SemType::from_entities([EntityId(9)]);
        assert!(matches!(
            build_distribution(&[SemType::new(), bad], &ab_tree()),
            Err(DistributionError::UnknownEntity { record: 1, .. })
        ));
    }

    #[test]
    fn cap_drops_long_types_and_renormalises() {
        let tree = ab_tree();
        let long = SemType::from_counts([(EntityId(0), 3), (EntityId(1), 2)]);
        let a = SemType::from_entities([EntityId(0)]);
        let dist = build_distribution(&[long.clone(), a.clone(), a.clone()], &tree).unwrap();
        assert_eq!(dist.total(), 2);
        assert!(dist.probability(&a).is_one());
        assert!(!dist.contains(&long));
        assert!(matches!(
            build_distribution(&[long], &tree),
            Err(DistributionError::NothingUnderCap(4))
        ));
    }

    #[test]
    fn entropy_of_uniform_four() {
        let tree = OntologyTree::from_entries((0..4).map(|i| (format!("X/Y/e{i}"), vec![format!("w{i}")]))).unwrap();
        let records: Vec<SemType> = (0..4).map(|i| SemType::from_entities([EntityId(i)])).collect();
        let dist = build_distribution(&records, &tree).unwrap();
        assert!((dist.entropy_bits() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn file_round_trip_and_errors() {
        let tree = ab_tree();
        let a = SemType::from_entities([EntityId(0)]);
        let ab = SemType::from_entities([EntityId(0), EntityId(1)]);
        let dist = build_distribution(&[a.clone(), ab.clone(), ab, SemType::new()], &tree).unwrap();
        let json = dist.to_json(&tree);
        assert!(json.contains("\"X/Y/a\": 1"));
        let back = ClassDistribution::parse_json(&json, &tree).unwrap();
        assert_eq!(back, dist);
        assert_eq!(back.to_json(&tree), json);

        let bad_total = r#"{"version":1,"total":3,"entries":[{"type":{"X/Y/a":1},"count":2}]}"#;
        assert!(matches!(
            ClassDistribution::parse_json(bad_total, &tree),
            Err(DistributionError::TotalMismatch { declared: 3, actual: 2 })
        ));
        let bad_path = r#"{"version":1,"total":2,"entries":[{"type":{"X/Y/z":1},"count":2}]}"#;
        assert!(matches!(
            ClassDistribution::parse_json(bad_path, &tree),
            Err(DistributionError::UnknownPath(_))
        ));
        let dup = r#"{"version":1,"total":2,"entries":[{"type":{},"count":1},{"type":{},"count":1}]}"#;
        assert!(matches!(
            ClassDistribution::parse_json(dup, &tree),
            Err(DistributionError::DuplicateType(1))
        ));
        let malformed = "{\"version\":1,\n\"total\":\"x\"}";
        assert!(matches!(
            ClassDistribution::parse_json(malformed, &tree),
            Err(DistributionError::Parse { line: 2, .. })
        ));
    }
}
