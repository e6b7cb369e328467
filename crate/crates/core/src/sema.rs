//! SEMA: dependence-aware breadth-first triple matching.
//!
//! The test graph is walked breadth-first from its root. A relation or
//! attribute triple matches when the reference holds an unused triple with
//! the same parent concept, label and child concept (or constant). A node's
//! instance triple can only match if the edge that first reached it matched,
//! so an error near the root hides the concept below it. The root's instance
//! matches iff both roots carry the same concept. There is no TOP triple and
//! every matched triple counts once.
//!
//! Each test node and edge is touched once, so scoring is linear in the size
//! of the graphs.

use std::collections::{HashMap, VecDeque};

use crate::graph::{AmrGraph, Constant, GraphError, NodeRef, Triple, TripleTarget};
use crate::scalar::Scalar;
use crate::score::MatchResult;

/// Options for [`sema_score_with`]. There are none yet.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SemaConfig {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum ChildKey<'a> {
    Concept(&'a str),
    Constant(&'a Constant),
}

type Signature<'a> = (&'a str, &'a str, ChildKey<'a>);

/// Consumable-once multiset.
struct Pool<K> {
    counts: HashMap<K, usize>,
}

impl<K: std::hash::Hash + Eq> Pool<K> {
    fn with_capacity(n: usize) -> Self {
        Self {
            counts: HashMap::with_capacity(n),
        }
    }

    fn add(&mut self, key: K) {
        *self.counts.entry(key).or_insert(0) += 1;
    }

    fn take(&mut self, key: &K) -> bool {
        match self.counts.get_mut(key) {
            Some(n) if *n > 0 => {
                *n -= 1;
                true
            }
            _ => false,
        }
    }
}

fn child_key<'a>(graph: &'a AmrGraph, target: &'a NodeRef) -> ChildKey<'a> {
    match target {
        NodeRef::Variable(v) => ChildKey::Concept(graph.concept(v).unwrap_or_default()),
        NodeRef::Constant(c) => ChildKey::Constant(c),
    }
}

pub fn sema_score<S: Scalar>(
    test: &AmrGraph,
    reference: &AmrGraph,
) -> Result<MatchResult<S>, GraphError> {
    sema_score_with(test, reference, &SemaConfig::default())
}

pub fn sema_score_with<S: Scalar>(
    test: &AmrGraph,
    reference: &AmrGraph,
    _config: &SemaConfig,
) -> Result<MatchResult<S>, GraphError> {
    test.check()?;
    reference.check()?;

    let mut signatures: Pool<Signature> = Pool::with_capacity(reference.relation_count());
    for edge in reference.edges() {
        let parent = reference.concept(&edge.source).unwrap_or_default();
        signatures.add((
            parent,
            edge.label.as_str(),
            child_key(reference, &edge.target),
        ));
    }
    let mut concepts: Pool<&str> = Pool::with_capacity(reference.node_count());
    for (_, concept) in reference.nodes() {
        concepts.add(concept);
    }

    let mut matched = Vec::new();
    if test.root_concept() == reference.root_concept() {
        concepts.take(&reference.root_concept());
        matched.push(Triple::instance(test.root(), test.root_concept()));
    }

    let mut discovered = std::collections::HashSet::with_capacity(test.node_count());
    discovered.insert(test.root());
    let mut queue = VecDeque::from([test.root()]);
    while let Some(parent) = queue.pop_front() {
        let parent_concept = test.concept(parent).unwrap_or_default();
        for (label, target) in test.children(parent)? {
            let key = child_key(test, target);
            let edge_matched = signatures.take(&(parent_concept, label, key));
            if edge_matched {
                matched.push(match target {
                    NodeRef::Variable(v) => Triple::relation(label, parent, v.as_str()),
                    NodeRef::Constant(c) => Triple::attribute(label, parent, c.clone()),
                });
            }
            if let NodeRef::Variable(child) = target {
                if discovered.insert(child.as_str()) {
                    queue.push_back(child);
                    let ChildKey::Concept(concept) = key else {
                        unreachable!()
                    };
                    if edge_matched && concepts.take(&concept) {
                        matched.push(Triple {
                            label: crate::graph::INSTANCE.to_string(),
                            source: child.clone(),
                            target: TripleTarget::Concept(concept.to_string()),
                        });
                    }
                }
            }
        }
    }

    let test_count = (test.node_count() + test.relation_count()) as u64;
    let reference_count = (reference.node_count() + reference.relation_count()) as u64;
    Ok(
        MatchResult::from_matched(matched, test_count, reference_count)
            .expect("each matched triple consumes a distinct reference triple"),
    )
}
