//! Offline entity matcher: NFC + lowercase folding, word tokenisation, and a
//! token trie scanned longest-match-first, left to right, without overlaps.

use std::collections::{HashMap, HashSet};

use unicode_normalization::UnicodeNormalization;

use super::sem_type::SemType;
use super::tree::{Entity, EntityId, OntologyTree};

/// NFC-normalises and lowercases `text`.
pub fn fold(text: &str) -> String {
    text.nfc().collect::<String>().to_lowercase()
}

/// Folded word tokens: maximal runs of alphanumeric characters.
pub fn words(text: &str) -> Vec<String> {
    fold(text)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Clone, Debug, Default)]
struct Node {
    children: HashMap<String, usize>,
    /// Entity owning this exact token sequence, and its canonical rank.
    terminal: Option<(EntityId, u32)>,
}

/// One gazetteer hit: token span `[start, end)` in the folded word list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Match {
    pub entity: EntityId,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug)]
pub struct Gazetteer {
    nodes: Vec<Node>,
    vocabulary: HashSet<String>,
}

impl Gazetteer {
    pub(crate) fn build(entities: &[Entity], rank: &[u32]) -> Self {
        let mut nodes = vec![Node::default()];
        let mut vocabulary = HashSet::new();
        for entity in entities {
            let r = rank[entity.id().index()];
            for surface in entity.surface_forms() {
                let mut at = 0;
                for w in words(surface) {
                    vocabulary.insert(w.clone());
                    let next = nodes.len();
                    at = *nodes[at].children.entry(w).or_insert(next);
                    if at == next {
                        nodes.push(Node::default());
                    }
                }
                // Shared surfaces resolve to the canonically-first entity.
                match nodes[at].terminal {
                    Some((_, existing)) if existing <= r => {}
                    _ => nodes[at].terminal = Some((entity.id(), r)),
                }
            }
        }
        Gazetteer { nodes, vocabulary }
    }

    /// Longest-match, left-to-right, non-overlapping scan over `tokens`.
    pub fn scan(&self, tokens: &[String]) -> Vec<Match> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let mut at = 0;
            let mut best = None;
            for (j, tok) in tokens[i..].iter().enumerate() {
                match self.nodes[at].children.get(tok) {
                    Some(&next) => at = next,
                    None => break,
                }
                if let Some((id, _)) = self.nodes[at].terminal {
                    best = Some((id, i + j + 1));
                }
            }
            match best {
                Some((entity, end)) => {
                    out.push(Match { entity, start: i, end });
                    i = end;
                }
                None => i += 1,
            }
        }
        out
    }

    /// Whether `word` (already folded) occurs in any surface form.
    pub fn is_vocabulary(&self, word: &str) -> bool {
        self.vocabulary.contains(word)
    }
}

/// Gazetteer realisation of the per-entity extraction method: the multiset of
/// tree entities mentioned in `sentence`.
pub fn extract_type(sentence: &str, tree: &OntologyTree) -> SemType {
    let tokens = words(sentence);
    SemType::from_entities(tree.gazetteer().scan(&tokens).into_iter().map(|m| m.entity))
}

/// Matches with their token spans, for callers that need positions.
pub fn extract_matches(sentence: &str, tree: &OntologyTree) -> Vec<Match> {
    tree.gazetteer().scan(&words(sentence))
}
