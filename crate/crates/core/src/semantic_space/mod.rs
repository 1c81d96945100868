//! Entities, the ontology-entity tree, the type algebra, and the offline
//! type extractor.

mod gazetteer;
mod sem_type;
mod tree;

pub use gazetteer::{extract_matches, extract_type, fold, words, Gazetteer, Match};
pub use sem_type::{type_add, type_leq, type_len, ClassRef, SemType};
pub use tree::{
    Concept, Entity, EntityId, EntityPath, OntologyTree, PathError, Placement, Subconcept, TreeError,
    TREE_FILE_VERSION,
};
