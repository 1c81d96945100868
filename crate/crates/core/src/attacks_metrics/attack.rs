use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantic_space::{words, OntologyTree};

/// Draws per perturbation before an entity-preserving attack gives up.
const MAX_DRAWS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    /// Copy a random token to a random position.
    Insert,
    Delete,
    /// Overwrite a token with another token of the same sentence.
    Replace,
    Swap,
}

impl AttackKind {
    pub const ALL: [AttackKind; 4] = [AttackKind::Insert, AttackKind::Delete, AttackKind::Replace, AttackKind::Swap];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Insert => "insert",
            AttackKind::Delete => "delete",
            AttackKind::Replace => "replace",
            AttackKind::Swap => "swap",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AttackError {
    #[error("unknown attack kind {0:?} (expected insert, delete, replace or swap)")]
    UnknownKind(String),
    #[error("attack count must be at least 1")]
    ZeroCount,
}

impl FromStr for AttackKind {
    type Err = AttackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttackKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| AttackError::UnknownKind(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Perturbations per sentence.
    pub count: u32,
    pub seed: u64,
}

impl AttackSpec {
    pub fn new(kind: AttackKind, count: u32, seed: u64) -> Result<Self, AttackError> {
        if count == 0 {
            return Err(AttackError::ZeroCount);
        }
        Ok(AttackSpec { kind, count, seed })
    }

    /// Spec for sentence `index` of a message; keeps sentences independent.
    pub fn for_sentence(&self, index: u64) -> AttackSpec {
        AttackSpec {
            seed: self.seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            ..*self
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Attacked {
    pub sentence: String,
    pub applied: u32,
    /// Fewer than `count` perturbations were possible.
    pub degenerate: bool,
}

/// Applies `spec.count` perturbations to the whitespace tokens of `sentence`.
/// Sentences with fewer than two tokens come back unchanged and flagged.
pub fn attack(sentence: &str, spec: &AttackSpec) -> Attacked {
    run(sentence, spec, |tokens, rng| perturb(tokens, spec.kind, &all_positions(tokens), rng))
}

/// Like [`attack`] but only touches tokens without vocabulary words and
/// never joins or splits a run of vocabulary words, so the gazetteer finds
/// the same entities afterwards.
pub fn attack_preserving(sentence: &str, spec: &AttackSpec, tree: &OntologyTree) -> Attacked {
    let gaz = tree.gazetteer();
    let free = |t: &str| words(t).iter().all(|w| !gaz.is_vocabulary(w));
    let runs = |tokens: &[String]| {
        let mut out: Vec<Vec<String>> = Vec::new();
        let mut open = false;
        for w in tokens.iter().flat_map(|t| words(t)) {
            if gaz.is_vocabulary(&w) {
                if !open {
                    out.push(Vec::new());
                    open = true;
                }
                out.last_mut().expect("run opened").push(w);
            } else {
                open = false;
            }
        }
        out
    };
    run(sentence, spec, |tokens, rng| {
        let positions: Vec<usize> = (0..tokens.len()).filter(|&i| free(&tokens[i])).collect();
        let before = runs(tokens);
        (0..MAX_DRAWS).find_map(|_| {
            perturb(tokens, spec.kind, &positions, rng).filter(|next| runs(next) == before)
        })
    })
}

fn run<F>(sentence: &str, spec: &AttackSpec, mut step: F) -> Attacked
where
    F: FnMut(&[String], &mut ChaCha8Rng) -> Option<Vec<String>>,
{
    let mut tokens: Vec<String> = sentence.split_whitespace().map(str::to_string).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut applied = 0;
    while applied < spec.count {
        if tokens.len() < 2 {
            break;
        }
        match step(&tokens, &mut rng) {
            Some(next) => tokens = next,
            None => break,
        }
        applied += 1;
    }
    Attacked {
        sentence: if applied == 0 { sentence.to_string() } else { tokens.join(" ") },
        applied,
        degenerate: applied < spec.count,
    }
}

fn all_positions(tokens: &[String]) -> Vec<usize> {
    (0..tokens.len()).collect()
}

/// One perturbation whose victim (and source) tokens come from `positions`.
fn perturb(tokens: &[String], kind: AttackKind, positions: &[usize], rng: &mut ChaCha8Rng) -> Option<Vec<String>> {
    let pick = |rng: &mut ChaCha8Rng| (!positions.is_empty()).then(|| positions[rng.random_range(0..positions.len())]);
    let mut next = tokens.to_vec();
    match kind {
        AttackKind::Insert => {
            let src = pick(rng)?;
            let at = rng.random_range(0..=tokens.len());
            next.insert(at, tokens[src].clone());
        }
        AttackKind::Delete => {
            next.remove(pick(rng)?);
        }
        AttackKind::Replace => {
            let victim = pick(rng)?;
            let mut pool: Vec<&String> = Vec::new();
            for &i in positions {
                if tokens[i] != tokens[victim] && !pool.contains(&&tokens[i]) {
                    pool.push(&tokens[i]);
                }
            }
            if pool.is_empty() {
                return None;
            }
            next[victim] = pool[rng.random_range(0..pool.len())].clone();
        }
        AttackKind::Swap => {
            if positions.len() < 2 {
                return None;
            }
            let i = rng.random_range(0..positions.len());
            let mut j = rng.random_range(0..positions.len() - 1);
            if j >= i {
                j += 1;
            }
            next.swap(positions[i], positions[j]);
        }
    }
    Some(next)
}
