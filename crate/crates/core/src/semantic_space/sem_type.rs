use std::collections::BTreeMap;
use std::fmt;

use super::tree::{EntityId, OntologyTree};

/// A multiset of entities: the entity content of one sentence.
///
/// Zero counts are never stored, so two types compare equal exactly when
/// they hold the same entities with the same multiplicities.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SemType {
    counts: BTreeMap<EntityId, u32>,
}

impl SemType {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a type from `(entity, count)` pairs; repeated entities are summed
    /// and zero counts are dropped.
    pub fn from_counts<I>(counts: I) -> Self
    where
        I: IntoIterator<Item = (EntityId, u32)>,
    {
        let mut t = Self::new();
        for (id, n) in counts {
            t.add_entity(id, n);
        }
        t
    }

    /// Convenience constructor: every listed entity counts once per occurrence.
    pub fn from_entities<I>(ids: I) -> Self
    where
        I: IntoIterator<Item = EntityId>,
    {
        Self::from_counts(ids.into_iter().map(|id| (id, 1)))
    }

    pub fn add_entity(&mut self, id: EntityId, n: u32) {
        if n == 0 {
            return;
        }
        *self.counts.entry(id).or_insert(0) += n;
    }

    /// Multiplicity of `id`; absent entities count zero.
    pub fn count(&self, id: EntityId) -> u32 {
        self.counts.get(&id).copied().unwrap_or(0)
    }

    /// Total number of entity occurrences, |T|.
    pub fn len(&self) -> u32 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Number of distinct entities.
    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (EntityId, u32)> + '_ {
        self.counts.iter().map(|(&id, &n)| (id, n))
    }

    /// Componentwise `self ≤ other`.
    pub fn leq(&self, other: &SemType) -> bool {
        self.counts.iter().all(|(id, &n)| n <= other.count(*id))
    }

    /// Componentwise sum.
    pub fn plus(&self, other: &SemType) -> SemType {
        let mut out = self.clone();
        for (id, n) in other.iter() {
            out.add_entity(id, n);
        }
        out
    }

    /// `self + {id:1}` without building a temporary type.
    pub fn with_entity(&self, id: EntityId) -> SemType {
        let mut out = self.clone();
        out.add_entity(id, 1);
        out
    }

    /// Componentwise `self - other`, or `None` when `other` is not `≤ self`.
    pub fn minus(&self, other: &SemType) -> Option<SemType> {
        if !other.leq(self) {
            return None;
        }
        let mut out = SemType::new();
        for (id, n) in self.iter() {
            out.add_entity(id, n - other.count(id));
        }
        Some(out)
    }

    /// The type's entities listed in the tree's canonical order, each repeated
    /// by its multiplicity. This is the unique sampling path for the type.
    pub fn canonical_sequence(&self, tree: &OntologyTree) -> Vec<EntityId> {
        let mut ids: Vec<EntityId> = self.counts.keys().copied().collect();
        ids.sort_by_key(|&id| tree.rank(id));
        ids.into_iter()
            .flat_map(|id| std::iter::repeat_n(id, self.count(id) as usize))
            .collect()
    }

    /// Renders the type with entity paths, e.g. `{Food/Fruit/apple:1}`.
    pub fn display<'a>(&'a self, tree: &'a OntologyTree) -> impl fmt::Display + 'a {
        DisplayType { t: self, tree }
    }
}

struct DisplayType<'a> {
    t: &'a SemType,
    tree: &'a OntologyTree,
}

impl fmt::Display for DisplayType<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, id) in self.t.canonical_sequence(self.tree).iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", self.tree.entity(*id).path())?;
        }
        f.write_str("}")
    }
}

/// A class 𝒞(T): every sentence whose type is `T`. Identified by its type.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassRef(pub SemType);

impl ClassRef {
    pub fn sem_type(&self) -> &SemType {
        &self.0
    }
}

impl From<SemType> for ClassRef {
    fn from(t: SemType) -> Self {
        ClassRef(t)
    }
}

/// |T|, the number of entity occurrences in a type.
pub fn type_len(t: &SemType) -> u32 {
    t.len()
}

/// The partial order on types: `a ≤ b` iff every multiplicity of `a` is at most
/// the matching multiplicity of `b`.
pub fn type_leq(a: &SemType, b: &SemType) -> bool {
    a.leq(b)
}

/// Combines two types as if their sentences were joined.
pub fn type_add(a: &SemType, b: &SemType) -> SemType {
    a.plus(b)
}
