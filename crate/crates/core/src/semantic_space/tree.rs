use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::gazetteer::{self, Gazetteer};

pub const TREE_FILE_VERSION: u32 = 1;

/// Dense index of an entity inside one [`OntologyTree`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PathError {
    #[error("entity path {path:?} has {found} segments, expected concept/subconcept/entity")]
    SegmentCount { path: String, found: usize },
    #[error("entity path {path:?} has an empty segment")]
    EmptySegment { path: String },
}

/// Root-to-leaf path: concept / subconcept / entity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityPath {
    concept: String,
    subconcept: String,
    name: String,
}

impl EntityPath {
    pub fn new(concept: &str, subconcept: &str, name: &str) -> Result<Self, PathError> {
        format!("{concept}/{subconcept}/{name}").parse()
    }

    pub fn concept(&self) -> &str {
        &self.concept
    }

    pub fn subconcept(&self) -> &str {
        &self.subconcept
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl FromStr for EntityPath {
    type Err = PathError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('/').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(PathError::SegmentCount {
                path: s.to_string(),
                found: parts.len(),
            });
        }
        if parts.iter().any(|p| p.is_empty()) {
            return Err(PathError::EmptySegment { path: s.to_string() });
        }
        Ok(EntityPath {
            concept: parts[0].to_string(),
            subconcept: parts[1].to_string(),
            name: parts[2].to_string(),
        })
    }
}

impl fmt::Display for EntityPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.concept, self.subconcept, self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entity {
    id: EntityId,
    surface_forms: Vec<String>,
    path: EntityPath,
}

impl Entity {
    pub fn id(&self) -> EntityId {
        self.id
    }

    pub fn path(&self) -> &EntityPath {
        &self.path
    }

    /// Surface forms as written in the tree file; the first is canonical.
    pub fn surface_forms(&self) -> &[String] {
        &self.surface_forms
    }

    pub fn canonical_surface(&self) -> &str {
        &self.surface_forms[0]
    }
}

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed tree file at line {line}, column {column} (field `{field}`): {message}")]
    Parse {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("unsupported tree file version {0}")]
    Version(u32),
    #[error("node {index}: {source}")]
    Path {
        index: usize,
        #[source]
        source: PathError,
    },
    #[error("node {index} ({path}): surface list is empty or contains a form without words")]
    Surfaces { index: usize, path: String },
    #[error("duplicate entity id {0}")]
    DuplicateId(u32),
    #[error("entity ids must be dense 0..{count}, found {id}")]
    SparseId { id: u32, count: usize },
    #[error("either every node or no node may carry an explicit id")]
    MixedIds,
    #[error("duplicate entity path {0}")]
    DuplicatePath(String),
    #[error("tree has no entities")]
    Empty,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeFile {
    version: u32,
    nodes: Vec<NodeRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<u32>,
    path: String,
    surfaces: Vec<String>,
}

/// Second-level node: one subconcept and its leaves in canonical order.
#[derive(Clone, Debug)]
pub struct Subconcept {
    pub name: String,
    pub entities: Vec<EntityId>,
}

/// Top-level node: one concept and its subconcepts in canonical order.
#[derive(Clone, Debug)]
pub struct Concept {
    pub name: String,
    pub subconcepts: Vec<Subconcept>,
}

/// Where an entity hangs in the tree, as indexes into [`OntologyTree::concepts`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Placement {
    pub concept: usize,
    pub subconcept: usize,
}

/// Three-level ontology-entity tree. Immutable once built.
///
/// The canonical order sorts leaves by path string and then by id. Paths that
/// share a concept (or concept/subconcept) prefix are contiguous under that
/// order, so walking the tree layer by layer with children in canonical order
/// visits leaves in exactly canonical order.
#[derive(Clone, Debug)]
pub struct OntologyTree {
    entities: Vec<Entity>,
    order: Vec<EntityId>,
    rank: Vec<u32>,
    concepts: Vec<Concept>,
    placement: Vec<Placement>,
    by_path: HashMap<String, EntityId>,
    gazetteer: Gazetteer,
}

impl OntologyTree {
    /// Builds a tree from `(path, surfaces)` pairs; ids follow input order.
    pub fn from_entries<P, S>(entries: impl IntoIterator<Item = (P, Vec<S>)>) -> Result<Self, TreeError>
    where
        P: AsRef<str>,
        S: AsRef<str>,
    {
        let nodes = entries
            .into_iter()
            .map(|(p, s)| NodeRecord {
                id: None,
                path: p.as_ref().to_string(),
                surfaces: s.iter().map(|x| x.as_ref().to_string()).collect(),
            })
            .collect();
        Self::from_records(nodes)
    }

    fn from_records(nodes: Vec<NodeRecord>) -> Result<Self, TreeError> {
        if nodes.is_empty() {
            return Err(TreeError::Empty);
        }
        let explicit = nodes.iter().filter(|n| n.id.is_some()).count();
        if explicit != 0 && explicit != nodes.len() {
            return Err(TreeError::MixedIds);
        }
        let count = nodes.len();
        let mut slots: Vec<Option<Entity>> = vec![None; count];
        let mut by_path = HashMap::with_capacity(count);
        for (index, node) in nodes.into_iter().enumerate() {
            let path: EntityPath = node
                .path
                .parse()
                .map_err(|source| TreeError::Path { index, source })?;
            let surfaces: Vec<String> = node.surfaces.iter().map(|s| s.trim().to_string()).collect();
            if surfaces.is_empty() || surfaces.iter().any(|s| gazetteer::words(s).is_empty()) {
                return Err(TreeError::Surfaces {
                    index,
                    path: path.to_string(),
                });
            }
            let raw_id = node.id.unwrap_or(index as u32);
            if raw_id as usize >= count {
                return Err(TreeError::SparseId { id: raw_id, count });
            }
            if slots[raw_id as usize].is_some() {
                return Err(TreeError::DuplicateId(raw_id));
            }
            let id = EntityId(raw_id);
            if by_path.insert(path.to_string(), id).is_some() {
                return Err(TreeError::DuplicatePath(path.to_string()));
            }
            slots[raw_id as usize] = Some(Entity {
                id,
                surface_forms: surfaces,
                path,
            });
        }
        // Every slot is filled: ids are unique and < count.
        let entities: Vec<Entity> = slots.into_iter().map(|e| e.expect("dense ids")).collect();

        let mut order: Vec<EntityId> = entities.iter().map(|e| e.id).collect();
        order.sort_by(|a, b| {
            let (ea, eb) = (&entities[a.index()], &entities[b.index()]);
            ea.path.to_string().cmp(&eb.path.to_string()).then(a.cmp(b))
        });
        let mut rank = vec![0u32; count];
        for (r, id) in order.iter().enumerate() {
            rank[id.index()] = r as u32;
        }

        let mut concepts: Vec<Concept> = Vec::new();
        let mut placement = vec![Placement { concept: 0, subconcept: 0 }; count];
        for &id in &order {
            let path = &entities[id.index()].path;
            if concepts.last().map(|c| c.name.as_str()) != Some(path.concept()) {
                concepts.push(Concept {
                    name: path.concept().to_string(),
                    subconcepts: Vec::new(),
                });
            }
            let concept = concepts.last_mut().expect("pushed above");
            if concept.subconcepts.last().map(|s| s.name.as_str()) != Some(path.subconcept()) {
                concept.subconcepts.push(Subconcept {
                    name: path.subconcept().to_string(),
                    entities: Vec::new(),
                });
            }
            concept.subconcepts.last_mut().expect("pushed above").entities.push(id);
            placement[id.index()] = Placement {
                concept: concepts.len() - 1,
                subconcept: concepts.last().unwrap().subconcepts.len() - 1,
            };
        }

        let gazetteer = Gazetteer::build(&entities, &rank);
        Ok(OntologyTree {
            entities,
            order,
            rank,
            concepts,
            placement,
            by_path,
            gazetteer,
        })
    }

    pub fn parse_json(text: &str) -> Result<Self, TreeError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: TreeFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            TreeError::Parse {
                line: inner.line(),
                column: inner.column(),
                field,
                message: inner.to_string(),
            }
        })?;
        if file.version != TREE_FILE_VERSION {
            return Err(TreeError::Version(file.version));
        }
        Self::from_records(file.nodes)
    }

    /// Serializes with explicit ids in id order. Canonical order is derived on
    /// load and never written.
    pub fn to_json(&self) -> String {
        let file = TreeFile {
            version: TREE_FILE_VERSION,
            nodes: self
                .entities
                .iter()
                .map(|e| NodeRecord {
                    id: Some(e.id.0),
                    path: e.path.to_string(),
                    surfaces: e.surface_forms.clone(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("tree serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TreeError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| TreeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TreeError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| TreeError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entity(&self, id: EntityId) -> &Entity {
        &self.entities[id.index()]
    }

    pub fn get(&self, id: EntityId) -> Option<&Entity> {
        self.entities.get(id.index())
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn contains(&self, id: EntityId) -> bool {
        id.index() < self.entities.len()
    }

    /// Entities in canonical order.
    pub fn canonical_order(&self) -> &[EntityId] {
        &self.order
    }

    /// Position of `id` in canonical order.
    pub fn rank(&self, id: EntityId) -> u32 {
        self.rank[id.index()]
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn placement(&self, id: EntityId) -> Placement {
        self.placement[id.index()]
    }

    pub fn lookup_path(&self, path: &str) -> Option<EntityId> {
        if let Some(&id) = self.by_path.get(path) {
            return Some(id);
        }
        // Tolerate stray whitespace around segments.
        let p: EntityPath = path.parse().ok()?;
        self.by_path.get(&p.to_string()).copied()
    }

    pub(crate) fn gazetteer(&self) -> &Gazetteer {
        &self.gazetteer
    }
}

impl PartialEq for OntologyTree {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities && self.order == other.order
    }
}

impl Eq for OntologyTree {}
