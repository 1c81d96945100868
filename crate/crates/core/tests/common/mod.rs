//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;

use semstego_core::distribution::ClassDistribution;
use semstego_core::semantic_space::{EntityId, OntologyTree, SemType};

/// Every class laid out on `[0, total)` in sampling order: sequences compared
/// rank by rank, a sequence ending before another (stop) sorting after all
/// of its continuations. Bounds are integer counts out of `total`.
pub struct FlatLayout {
    pub total: u128,
    pub classes: Vec<(SemType, u128, u128)>,
}

fn order_key(t: &SemType, tree: &OntologyTree) -> Vec<u32> {
    let mut ranks: Vec<u32> = t
        .iter()
        .flat_map(|(id, n)| std::iter::repeat_n(tree.rank(id), n as usize))
        .collect();
    ranks.sort_unstable();
    ranks.push(u32::MAX);
    ranks
}

impl FlatLayout {
    pub fn new(dist: &ClassDistribution, tree: &OntologyTree) -> Self {
        let mut types: Vec<(Vec<u32>, SemType, u64)> = dist
            .entries()
            .map(|(t, n)| (order_key(t, tree), t.clone(), n))
            .collect();
        types.sort_by(|a, b| a.0.cmp(&b.0));
        let mut cum = 0u128;
        let classes = types
            .into_iter()
            .map(|(_, t, n)| {
                let lo = cum;
                cum += n as u128;
                (t, lo, cum)
            })
            .collect();
        FlatLayout { total: cum, classes }
    }

    /// Class whose slot holds `value / 2^bits`.
    pub fn locate(&self, value: u128, bits: u32) -> &(SemType, u128, u128) {
        let scaled = value * self.total;
        self.classes
            .iter()
            .find(|(_, lo, hi)| (lo << bits) <= scaled && scaled < (hi << bits))
            .expect("slots cover [0, 1)")
    }
}

/// Longest bit string whose dyadic cell contains `[lo, hi) / denom`, found by
/// trying every cell of every length up to `max_len`.
pub fn brute_force_prefix(lo: u128, hi: u128, denom: u128, max_len: u32) -> Vec<bool> {
    let mut best = Vec::new();
    for len in 0..=max_len {
        for s in 0..(1u128 << len) {
            // s/2^len ≤ lo/denom and hi/denom ≤ (s+1)/2^len
            if s * denom <= lo << len && hi << len <= (s + 1) * denom {
                best = (0..len).rev().map(|i| (s >> i) & 1 == 1).collect();
            }
        }
    }
    best
}

/// Integer value of the first `len` bits.
pub fn bits_value(bits: &[bool]) -> u128 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u128)
}

/// A tree whose three entities sit in distinct concepts and subconcepts.
pub fn three_entity_tree() -> OntologyTree {
    OntologyTree::from_entries(vec![
        ("Animal/Pet/cat", vec!["cat"]),
        ("Food/Fruit/apple", vec!["apple"]),
        ("Food/Dish/soup", vec!["soup"]),
    ])
    .unwrap()
}

/// All types over the first `entities` ids with `|T| ≤ max_len`.
pub fn all_types(entities: u32, max_len: u32) -> Vec<SemType> {
    fn go(next: u32, entities: u32, left: u32, cur: &mut Vec<EntityId>, out: &mut Vec<SemType>) {
        out.push(SemType::from_entities(cur.iter().copied()));
        if left == 0 {
            return;
        }
        for e in next..entities {
            cur.push(EntityId(e));
            go(e, entities, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, entities, max_len, &mut Vec::new(), &mut out);
    out
}

/// Total-order helper for comparing f64 histograms.
pub fn cmp_f64(a: &f64, b: &f64) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}
