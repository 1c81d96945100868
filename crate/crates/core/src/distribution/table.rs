use std::collections::BTreeMap;
use std::ops::Range;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::{ClassDistribution, DistributionError, NodeProbabilities};
use crate::interval::{Interval, Scaled};
use crate::semantic_space::{EntityId, OntologyTree, SemType};

pub type NodeId = usize;

/// Prefix-count trie over the canonical sequences of every supported type.
///
/// A node is a prefix `t_pre`. `total` counts the corpus types passing through
/// it, `stop` those equal to it, and each edge the types continuing with that
/// entity. Dividing by `total` gives the same conditional probabilities as
/// [`super::assign_probabilities`], with integer weights.
#[derive(Clone, Debug)]
pub struct CodingTable {
    nodes: Vec<PrefixNode>,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct PrefixNode {
    pub(crate) total: u64,
    pub(crate) stop: u64,
    /// Continuations in canonical order.
    pub(crate) edges: Vec<Edge>,
    pub(crate) groups: Vec<ConceptGroup>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Edge {
    pub(crate) entity: EntityId,
    pub(crate) weight: u64,
    pub(crate) child: NodeId,
}

/// Edges of one node grouped under their concept.
#[derive(Clone, Debug)]
pub(crate) struct ConceptGroup {
    pub(crate) weight: u64,
    pub(crate) subgroups: Vec<SubGroup>,
}

#[derive(Clone, Debug)]
pub(crate) struct SubGroup {
    pub(crate) weight: u64,
    pub(crate) edges: Range<usize>,
}

type Children = BTreeMap<u32, (EntityId, u64, NodeId)>;

impl CodingTable {
    pub fn build(dist: &ClassDistribution, tree: &OntologyTree) -> Self {
        // (total, stop, children keyed by canonical rank)
        let mut pending: Vec<(u64, u64, Children)> = vec![(0, 0, BTreeMap::new())];
        for (t, n) in dist.entries() {
            let mut at = 0;
            pending[at].0 += n;
            for e in t.canonical_sequence(tree) {
                let fresh = pending.len();
                let edge = pending[at].2.entry(tree.rank(e)).or_insert((e, 0, fresh));
                edge.1 += n;
                let next = edge.2;
                if next == fresh {
                    pending.push((0, 0, BTreeMap::new()));
                }
                at = next;
                pending[at].0 += n;
            }
            pending[at].1 += n;
        }
        let nodes = pending
            .into_iter()
            .map(|(total, stop, children)| {
                let edges: Vec<Edge> = children
                    .into_values()
                    .map(|(entity, weight, child)| Edge { entity, weight, child })
                    .collect();
                let groups = group_edges(&edges, tree);
                PrefixNode {
                    total,
                    stop,
                    edges,
                    groups,
                }
            })
            .collect();
        CodingTable { nodes }
    }

    pub fn root(&self) -> NodeId {
        0
    }

    /// Number of distinct prefixes, the root included.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn node(&self, id: NodeId) -> &PrefixNode {
        &self.nodes[id]
    }

    pub fn child(&self, node: NodeId, entity: EntityId) -> Option<NodeId> {
        self.nodes[node].edges.iter().find(|e| e.entity == entity).map(|e| e.child)
    }

    /// Node of `t`'s canonical sequence, if any supported type passes through it.
    pub fn lookup(&self, t: &SemType, tree: &OntologyTree) -> Option<NodeId> {
        t.canonical_sequence(tree)
            .into_iter()
            .try_fold(self.root(), |at, e| self.child(at, e))
    }

    /// Normalised probabilities at `node`, for comparison with the direct route.
    pub fn node_probabilities(&self, node: NodeId, tree: &OntologyTree) -> NodeProbabilities {
        let n = &self.nodes[node];
        let total = BigInt::from(n.total);
        let mut entity = vec![BigRational::zero(); tree.len()];
        for e in &n.edges {
            entity[e.entity.index()] = BigRational::new(BigInt::from(e.weight), total.clone());
        }
        NodeProbabilities::from_leaves(tree, entity, BigRational::new(BigInt::from(n.stop), total))
    }

    /// Interval sampled for `t`. Within a node, children take disjoint slots in
    /// canonical order and the stop slot comes last.
    pub fn interval(&self, t: &SemType, tree: &OntologyTree) -> Option<Interval> {
        self.scaled_interval(t, tree).map(|s| s.to_interval())
    }

    pub(crate) fn scaled_interval(&self, t: &SemType, tree: &OntologyTree) -> Option<Scaled> {
        let mut s = Scaled::unit();
        let mut at = self.root();
        for e in t.canonical_sequence(tree) {
            let node = &self.nodes[at];
            let mut cum = 0;
            let edge = node.edges.iter().find(|edge| {
                if edge.entity == e {
                    return true;
                }
                cum += edge.weight;
                false
            })?;
            s.narrow(cum, edge.weight, node.total);
            at = edge.child;
        }
        let node = &self.nodes[at];
        if node.stop == 0 {
            return None;
        }
        s.narrow(node.total - node.stop, node.stop, node.total);
        Some(s)
    }
}

fn group_edges(edges: &[Edge], tree: &OntologyTree) -> Vec<ConceptGroup> {
    let mut groups: Vec<(usize, ConceptGroup)> = Vec::new();
    let mut current_sub: Option<(usize, usize)> = None;
    for (i, edge) in edges.iter().enumerate() {
        let place = tree.placement(edge.entity);
        if groups.last().map(|g| g.0) != Some(place.concept) {
            groups.push((
                place.concept,
                ConceptGroup {
                    weight: 0,
                    subgroups: Vec::new(),
                },
            ));
            current_sub = None;
        }
        let group = &mut groups.last_mut().expect("pushed").1;
        group.weight += edge.weight;
        if current_sub != Some((place.concept, place.subconcept)) {
            group.subgroups.push(SubGroup {
                weight: 0,
                edges: i..i,
            });
            current_sub = Some((place.concept, place.subconcept));
        }
        let sub = group.subgroups.last_mut().expect("pushed");
        sub.weight += edge.weight;
        sub.edges.end = i + 1;
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// The interval a sample of class 𝒞(t) falls into; its length is p(𝒞(t)).
pub fn class_interval(dist: &ClassDistribution, tree: &OntologyTree, t: &SemType) -> Result<Interval, DistributionError> {
    if !dist.contains(t) {
        return Err(DistributionError::UnknownClass);
    }
    CodingTable::build(dist, tree)
        .interval(t, tree)
        .ok_or(DistributionError::UnknownClass)
}
