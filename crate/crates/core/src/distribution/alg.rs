use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::{ClassDistribution, DistributionError};
use crate::semantic_space::{EntityId, OntologyTree, SemType};

/// Normalised probabilities of every tree node for one sampling step.
///
/// Entity values are the leaves; subconcept and concept values are sums of
/// their leaves. `stop` is the mass of ending the sample at the current
/// prefix. Everything sums to one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeProbabilities {
    entity: Vec<BigRational>,
    subconcept: Vec<Vec<BigRational>>,
    concept: Vec<BigRational>,
    stop: BigRational,
}

impl NodeProbabilities {
    pub fn entity(&self, id: EntityId) -> &BigRational {
        &self.entity[id.index()]
    }

    pub fn concept(&self, concept: usize) -> &BigRational {
        &self.concept[concept]
    }

    pub fn subconcept(&self, concept: usize, subconcept: usize) -> &BigRational {
        &self.subconcept[concept][subconcept]
    }

    pub fn stop(&self) -> &BigRational {
        &self.stop
    }

    /// Stop mass plus every leaf.
    pub fn total(&self) -> BigRational {
        self.entity.iter().fold(self.stop.clone(), |acc, p| acc + p)
    }

    pub(crate) fn from_leaves(tree: &OntologyTree, entity: Vec<BigRational>, stop: BigRational) -> Self {
        let mut subconcept: Vec<Vec<BigRational>> = tree
            .concepts()
            .iter()
            .map(|c| vec![BigRational::zero(); c.subconcepts.len()])
            .collect();
        let mut concept = vec![BigRational::zero(); tree.concepts().len()];
        for (i, p) in entity.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let place = tree.placement(EntityId(i as u32));
            subconcept[place.concept][place.subconcept] += p;
            concept[place.concept] += p;
        }
        NodeProbabilities {
            entity,
            subconcept,
            concept,
            stop,
        }
    }
}

/// Conditional probabilities of the next node given the prefix `t_pre`.
///
/// Candidates are entities at or after `last` in canonical order (`last`
/// defaults to the canonically-last entity of `t_pre`). A class `T` supports
/// candidate `e` when `t_pre + e ≤ T` and the remainder `T − t_pre` holds no
/// entity ranked before `e`, so each class is reachable along exactly one
/// path. Stopping has weight p(𝒞(t_pre)).
pub fn assign_probabilities(
    tree: &OntologyTree,
    dist: &ClassDistribution,
    t_pre: &SemType,
    last: Option<EntityId>,
) -> Result<NodeProbabilities, DistributionError> {
    let floor = last
        .or_else(|| t_pre.iter().map(|(id, _)| id).max_by_key(|&id| tree.rank(id)))
        .map(|id| tree.rank(id))
        .unwrap_or(0);
    let unit = |n: u64| BigRational::new(BigInt::from(n), BigInt::from(dist.total()));

    // Remainders of every class extending the prefix, with their probability.
    let remainders: Vec<(SemType, BigRational)> = dist
        .entries()
        .filter_map(|(t, n)| t.minus(t_pre).map(|r| (r, unit(n))))
        .collect();

    let mut entity = vec![BigRational::zero(); tree.len()];
    for &e in tree.canonical_order() {
        let rank = tree.rank(e);
        if rank < floor {
            continue;
        }
        for (rest, p) in &remainders {
            if rest.count(e) > 0 && rest.iter().all(|(id, _)| tree.rank(id) >= rank) {
                entity[e.index()] += p;
            }
        }
    }
    let stop = dist.probability(t_pre);

    let sum = entity.iter().fold(stop.clone(), |acc, p| acc + p);
    if sum.is_zero() {
        return Err(DistributionError::DeadPrefix);
    }
    for p in entity.iter_mut() {
        if !p.is_zero() {
            *p /= &sum;
        }
    }
    Ok(NodeProbabilities::from_leaves(tree, entity, stop / &sum))
}
