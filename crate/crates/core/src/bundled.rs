//! A small ontology and corpus shipped with the crate for demos and tests.

use crate::distribution::{build_distribution, corpus_records, ClassDistribution};
use crate::semantic_space::OntologyTree;

pub const TREE_JSON: &str = include_str!("../data/tree.json");
pub const CORPUS: &str = include_str!("../data/corpus.txt");

pub fn tree() -> OntologyTree {
    OntologyTree::parse_json(TREE_JSON).expect("bundled tree is valid")
}

/// Frequencies of the bundled corpus under the default type-length cap.
pub fn distribution(tree: &OntologyTree) -> ClassDistribution {
    build_distribution(&corpus_records(CORPUS, tree), tree).expect("bundled corpus is valid")
}
