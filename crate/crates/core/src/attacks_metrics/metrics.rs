use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{extract_sentence_type, Agent, SamplingParams};
use crate::codec::Codec;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("no {0}-grams in the corpus")]
    NoNgrams(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRate {
    pub sentences: usize,
    pub tokens: usize,
    pub bits: usize,
    pub bits_per_sentence: f64,
    pub bits_per_token: f64,
}

/// Mean bits per sentence and total bits over total whitespace tokens.
/// Empty inputs give zero rates.
pub fn embedding_rate<S: AsRef<str>>(bits: &[usize], sentences: &[S]) -> EmbeddingRate {
    let total: usize = bits.iter().sum();
    let tokens: usize = sentences.iter().map(|s| s.as_ref().split_whitespace().count()).sum();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    EmbeddingRate {
        sentences: bits.len(),
        tokens,
        bits: total,
        bits_per_sentence: ratio(total, bits.len()),
        bits_per_token: ratio(total, tokens),
    }
}

/// Chance that at least one of `n` independent attempts succeeds:
/// `1 - (1 - p)^n`. `n` may be fractional.
pub fn msr_estimate(p: f64, n: f64) -> f64 {
    1.0 - (1.0 - p).powf(n)
}

/// The `n` at which [`msr_estimate`] reaches `target`.
pub fn msr_iterations_for(p: f64, target: f64) -> f64 {
    (1.0 - target).ln() / (1.0 - p).ln()
}

/// Unique n-grams over all n-grams; n-grams do not cross sentences.
pub fn distinct_n<S: AsRef<str>>(sentences: &[S], n: usize) -> Result<f64, MetricsError> {
    if n == 0 {
        return Err(MetricsError::ZeroOrder);
    }
    let mut seen = HashSet::new();
    let mut total = 0usize;
    for s in sentences {
        let tokens: Vec<&str> = s.as_ref().split_whitespace().collect();
        for gram in tokens.windows(n) {
            total += 1;
            seen.insert(gram.to_vec());
        }
    }
    if total == 0 {
        return Err(MetricsError::NoNgrams(n));
    }
    Ok(seen.len() as f64 / total as f64)
}

pub const ITERATION_LABELS: [&str; 4] = ["0", "1", "2", "3+"];

/// How many feedback rounds sentences needed, with 3 and above pooled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationHistogram {
    pub counts: [u64; 4],
}

impl IterationHistogram {
    pub fn add(&mut self, iterations: u32) {
        self.counts[(iterations as usize).min(3)] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn fractions(&self) -> [f64; 4] {
        let total = self.total().max(1) as f64;
        self.counts.map(|c| c as f64 / total)
    }
}

impl FromIterator<u32> for IterationHistogram {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        let mut h = IterationHistogram::default();
        for i in iter {
            h.add(i);
        }
        h
    }
}

/// Approved sentences over generation attempts.
pub fn mission_success_rate(iterations: &[u32]) -> Option<f64> {
    let attempts: u64 = iterations.iter().map(|&i| u64::from(i) + 1).sum();
    (attempts > 0).then(|| iterations.len() as f64 / attempts as f64)
}

/// A stego sentence (possibly attacked) and the bits it should decode to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DsrCase {
    pub type_len: u32,
    /// Codebook prefix of the sampled type.
    pub expected: Vec<bool>,
    pub sentence: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DsrBucket {
    pub type_len: u32,
    pub trials: u64,
    pub successes: u64,
    pub rate: Option<f64>,
}

/// Decodes every case and buckets exact-match success by type length.
/// Buckets 1 through 4 are always present. No key is needed: the comparison
/// is on codebook prefixes.
pub fn decoding_success_rate(
    cases: &[DsrCase],
    codec: &Codec,
    extractor: &dyn Agent,
    sampling: SamplingParams,
) -> Vec<DsrBucket> {
    let outcomes: Vec<(u32, bool)> = cases
        .par_iter()
        .map(|case| {
            let ok = extract_sentence_type(&case.sentence, codec.tree(), extractor, sampling)
                .ok()
                .and_then(|t| codec.prefix(&t).ok().map(|p| p == case.expected.as_slice()))
            .unwrap_or(false);
            (case.type_len, ok)
        })
        .collect();
    let mut tally: BTreeMap<u32, (u64, u64)> = (1..=4).map(|k| (k, (0, 0))).collect();
    for (k, ok) in outcomes {
        let e = tally.entry(k).or_default();
        e.0 += 1;
        e.1 += u64::from(ok);
    }
    tally
        .into_iter()
        .map(|(type_len, (trials, successes))| DsrBucket {
            type_len,
            trials,
            successes,
            rate: (trials > 0).then(|| successes as f64 / trials as f64),
        })
        .collect()
}

/// Pooled rate over all buckets.
pub fn overall_rate(buckets: &[DsrBucket]) -> Option<f64> {
    let trials: u64 = buckets.iter().map(|b| b.trials).sum();
    let ok: u64 = buckets.iter().map(|b| b.successes).sum();
    (trials > 0).then(|| ok as f64 / trials as f64)
}
