use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{format_type_reply, Agent, AgentError, AgentRequest, CheckVerdict, Role};
use crate::semantic_space::{extract_matches, extract_type, words, EntityId, OntologyTree, SemType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultKind {
    /// Mention an entity outside the target.
    Stray,
    /// Leave one target entity out.
    Missing,
    /// Misspell one target entity so it no longer matches.
    Typo,
}

/// When the mock generator deliberately gets a sentence wrong.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum FaultPlan {
    #[default]
    None,
    /// Each attempt goes wrong with probability `rate`, by a kind drawn from `kinds`.
    Random { rate: f64, kinds: Vec<FaultKind> },
    /// Attempt `i` applies `script[i]`; attempts past the end are clean.
    Scripted { script: Vec<Option<FaultKind>> },
}

const CLAUSES: &[(&str, &[&str])] = &[
    (
        "location",
        &[
            "we spent a slow afternoon wandering around {}",
            "the old photographs of {} still hang on the wall",
            "everyone agreed that {} looked lovely in the rain",
        ],
    ),
    (
        "person",
        &[
            "{} laughed quietly at the joke",
            "nobody expected {} to arrive so early",
            "{} kept a small notebook close at hand",
        ],
    ),
    (
        "time",
        &[
            "{} passed more quickly than anyone expected",
            "the plan slowly took shape over {}",
            "things felt calmer during {}",
        ],
    ),
    (
        "food",
        &[
            "the table was set with {} for everyone",
            "someone brought {} wrapped in brown paper",
            "{} smelled wonderful on the counter",
        ],
    ),
    (
        "organization",
        &[
            "a long letter arrived from {} this morning",
            "{} announced a sudden change of plans",
            "the report mentioned {} more than once",
        ],
    ),
    (
        "animal",
        &[
            "a curious {} wandered past the gate",
            "{} slept in the warm corner",
            "we watched {} for a while",
        ],
    ),
    (
        "activity",
        &[
            "they talked about {} for hours",
            "{} filled most of the weekend",
            "she finally tried {} with her cousins",
        ],
    ),
];

const DEFAULT_CLAUSES: &[&str] = &[
    "there was talk of {} again",
    "{} came up in conversation",
    "we kept thinking about {}",
];

const TAILS: &[&str] = &[
    "and it stayed on our minds for the rest of that long season",
    "which everyone remembered long after the evening was over",
    "though nobody could quite explain why it mattered so much to us",
    "and the whole story was told again at the next gathering",
];

const CONNECTORS: &[&str] = &["and then", "while", "although", "because", "so"];

const EMPTY_SENTENCES: &[&str] = &[
    "It was a quiet evening and nothing much happened.",
    "We sat by the window and watched the clouds drift by.",
    "The letter was short but surprisingly kind.",
    "Nobody said a word for a long while.",
    "The weather changed twice before lunch.",
];

#[derive(Debug)]
struct Bank {
    /// First surface per entity that extracts back to exactly that entity.
    surfaces: Vec<Option<String>>,
    clauses: HashMap<String, Vec<&'static str>>,
    default_clauses: Vec<&'static str>,
    connectors: Vec<&'static str>,
    tails: Vec<&'static str>,
    empty: Vec<&'static str>,
}

impl Bank {
    fn build(tree: &OntologyTree) -> Self {
        let clean = |text: &str| {
            let stripped = text.replace("{}", " ");
            words(&stripped).iter().all(|w| !tree.gazetteer().is_vocabulary(w))
        };
        let surfaces = tree
            .entities()
            .iter()
            .map(|e| {
                let alone = SemType::from_entities([e.id()]);
                e.surface_forms()
                    .iter()
                    .find(|s| extract_type(s, tree) == alone)
                    .cloned()
            })
            .collect();
        let clauses = CLAUSES
            .iter()
            .map(|(k, v)| (k.to_string(), v.iter().copied().filter(|c| clean(c)).collect::<Vec<_>>()))
            .filter(|(_, v)| !v.is_empty())
            .collect();
        let mut default_clauses: Vec<&str> = DEFAULT_CLAUSES.iter().copied().filter(|c| clean(c)).collect();
        if default_clauses.is_empty() {
            default_clauses.push("{}");
        }
        let mut connectors: Vec<&str> = CONNECTORS.iter().copied().filter(|c| clean(c)).collect();
        if connectors.is_empty() {
            connectors.push("");
        }
        let tails = TAILS.iter().copied().filter(|c| clean(c)).collect();
        let empty = EMPTY_SENTENCES.iter().copied().filter(|c| clean(c)).collect();
        Bank {
            surfaces,
            clauses,
            default_clauses,
            connectors,
            tails,
            empty,
        }
    }
}

/// Offline stand-in for all three agents. Generation fills concept-keyed
/// templates and can inject faults; checking and extraction use the
/// gazetteer, so an approved sentence always extracts to its target.
#[derive(Clone, Debug)]
pub struct MockAgent {
    tree: Arc<OntologyTree>,
    seed: u64,
    faults: FaultPlan,
    bank: Arc<Bank>,
}

impl MockAgent {
    pub fn new(tree: Arc<OntologyTree>, seed: u64) -> Self {
        let bank = Arc::new(Bank::build(&tree));
        MockAgent {
            tree,
            seed,
            faults: FaultPlan::None,
            bank,
        }
    }

    pub fn with_faults(mut self, faults: FaultPlan) -> Self {
        self.faults = faults;
        self
    }

    fn rng(&self, target: &SemType, attempt: u32, sequence: u64) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_be_bytes());
        h.update(sequence.to_be_bytes());
        h.update(attempt.to_be_bytes());
        for (id, n) in target.iter() {
            h.update(id.0.to_be_bytes());
            h.update(n.to_be_bytes());
        }
        ChaCha8Rng::from_seed(h.finalize().into())
    }

    fn fault_for(&self, attempt: u32, rng: &mut ChaCha8Rng) -> Option<FaultKind> {
        match &self.faults {
            FaultPlan::None => None,
            FaultPlan::Random { rate, kinds } => {
                if !kinds.is_empty() && rng.random_bool(rate.clamp(0.0, 1.0)) {
                    kinds.choose(rng).copied()
                } else {
                    None
                }
            }
            FaultPlan::Scripted { script } => script.get(attempt as usize).copied().flatten(),
        }
    }

    /// Deterministic in (seed, target, attempt, sequence).
    pub fn generate(&self, target: &SemType, attempt: u32, sequence: u64) -> String {
        let mut rng = self.rng(target, attempt, sequence);
        let fault = self.fault_for(attempt, &mut rng);
        let mut mentions: Vec<(EntityId, String)> = target
            .canonical_sequence(&self.tree)
            .into_iter()
            .map(|id| (id, self.surface(id)))
            .collect();
        match fault {
            Some(FaultKind::Missing) if !mentions.is_empty() => {
                let i = rng.random_range(0..mentions.len());
                mentions.remove(i);
            }
            Some(FaultKind::Typo) if !mentions.is_empty() => {
                let i = rng.random_range(0..mentions.len());
                match self.misspell(&mentions[i].1, &mut rng) {
                    Some(bad) => mentions[i].1 = bad,
                    None => {
                        mentions.remove(i);
                    }
                }
            }
            Some(_) => {
                if let Some(stray) = self.stray(target, &mut rng) {
                    let at = rng.random_range(0..=mentions.len());
                    mentions.insert(at, stray);
                }
            }
            None => {}
        }
        self.render(&mentions, &mut rng)
    }

    fn surface(&self, id: EntityId) -> String {
        self.bank.surfaces[id.index()]
            .clone()
            .unwrap_or_else(|| self.tree.entity(id).canonical_surface().to_string())
    }

    fn stray(&self, target: &SemType, rng: &mut ChaCha8Rng) -> Option<(EntityId, String)> {
        let pool: Vec<EntityId> = self
            .tree
            .canonical_order()
            .iter()
            .copied()
            .filter(|&id| target.count(id) == 0 && self.bank.surfaces[id.index()].is_some())
            .collect();
        pool.choose(rng).map(|&id| (id, self.surface(id)))
    }

    /// Drops one inner letter of the longest word; `None` if every variant
    /// still matches some entity.
    fn misspell(&self, surface: &str, rng: &mut ChaCha8Rng) -> Option<String> {
        let chars: Vec<char> = surface.chars().collect();
        let mut spots: Vec<usize> = (1..chars.len().saturating_sub(1))
            .filter(|&i| chars[i].is_alphanumeric() && chars[i - 1].is_alphanumeric() && chars[i + 1].is_alphanumeric())
            .collect();
        if spots.is_empty() {
            return None;
        }
        let start = rng.random_range(0..spots.len());
        spots.rotate_left(start);
        spots.into_iter().find_map(|i| {
            let bad: String = chars.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, c)| c).collect();
            extract_type(&bad, &self.tree).is_empty().then_some(bad)
        })
    }

    fn render(&self, mentions: &[(EntityId, String)], rng: &mut ChaCha8Rng) -> String {
        if mentions.is_empty() {
            return self
                .bank
                .empty
                .choose(rng)
                .copied()
                .unwrap_or("Nothing happened.")
                .to_string();
        }
        let mut parts = Vec::with_capacity(mentions.len());
        for (id, surface) in mentions {
            let concept = self.tree.entity(*id).path().concept().to_lowercase();
            let bank = self.bank.clauses.get(&concept).unwrap_or(&self.bank.default_clauses);
            let clause = bank.choose(rng).expect("non-empty bank");
            parts.push(clause.replace("{}", surface));
        }
        let mut sentence = parts[0].clone();
        for part in &parts[1..] {
            let connector = self.bank.connectors.choose(rng).expect("non-empty");
            sentence.push_str(", ");
            if !connector.is_empty() {
                sentence.push_str(connector);
                sentence.push(' ');
            }
            sentence.push_str(part);
        }
        if let Some(tail) = self.bank.tails.choose(rng) {
            sentence.push_str(", ");
            sentence.push_str(tail);
        }
        sentence.push('.');
        capitalize(&sentence)
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

impl Agent for MockAgent {
    fn respond(&self, request: &AgentRequest) -> Result<String, AgentError> {
        request.validate()?;
        Ok(match request.role {
            Role::Generate => self.generate(request.target(), request.attempt, request.sequence),
            Role::Check => check_sentence(request.sentence(), request.target(), &self.tree).to_reply(),
            Role::Extract => format_type_reply(&extract_type(request.sentence(), &self.tree), &self.tree),
        })
    }
}

/// Approves exactly when the sentence's extracted type equals `target`.
/// Otherwise the hint names the first extra mention, or else the first
/// missing entity.
pub fn check_sentence(sentence: &str, target: &SemType, tree: &OntologyTree) -> CheckVerdict {
    let matches = extract_matches(sentence, tree);
    let found = SemType::from_entities(matches.iter().map(|m| m.entity));
    if &found == target {
        return CheckVerdict::approve();
    }
    let category = |id: EntityId| tree.entity(id).path().concept().to_lowercase();
    let mut seen = SemType::new();
    for m in &matches {
        seen.add_entity(m.entity, 1);
        if seen.count(m.entity) > target.count(m.entity) {
            return CheckVerdict::reject(format!(
                "\"{}\" should not be in the sentence because it is an element in {} category.",
                tree.entity(m.entity).canonical_surface(),
                category(m.entity)
            ));
        }
    }
    let (id, n) = target
        .canonical_sequence(tree)
        .into_iter()
        .map(|id| (id, target.count(id)))
        .find(|&(id, n)| found.count(id) < n)
        .expect("types differ");
    let times = if n > 1 { format!(" {n} times") } else { String::new() };
    CheckVerdict::reject(format!(
        "\"{}\" is missing; it should appear{times} in the sentence as the element of {} category.",
        tree.entity(id).canonical_surface(),
        category(id)
    ))
}
