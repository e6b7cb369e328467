#![allow(dead_code)]

//! Graph generators and brute-force oracles shared by the integration tests.
//! Nothing here calls into the matchers under test.

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use sema::{AmrGraph, Constant, NodeRef, Triple, TripleTarget};

pub fn fixture(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(path)
}

pub fn read_fixture(path: &str) -> String {
    std::fs::read_to_string(fixture(path)).unwrap()
}

const CONCEPTS: &[&str] = &[
    "want-01", "boy", "girl", "go-01", "and", "fear", "person", "name", "city", "say-01",
    "think-01", "dog",
];
const LABELS: &[&str] = &[
    ":ARG0",
    ":ARG1",
    ":ARG2",
    ":mod",
    ":op1",
    ":op2",
    ":location",
];

#[derive(Debug, Clone, Copy)]
pub struct GraphShape {
    pub max_nodes: usize,
    pub reentrancy: f64,
    pub attributes: f64,
    /// Concepts are drawn from this many entries of the pool; fewer means
    /// more repeated concepts.
    pub concept_pool: usize,
    pub distinct_concepts: bool,
}

impl Default for GraphShape {
    fn default() -> Self {
        Self {
            max_nodes: 30,
            reentrancy: 0.2,
            attributes: 0.3,
            concept_pool: CONCEPTS.len(),
            distinct_concepts: false,
        }
    }
}

fn var_name(i: usize) -> String {
    // a0, b0, ... z0, a1, ...
    let letter = (b'a' + (i % 26) as u8) as char;
    format!("{letter}{}", i / 26)
}

/// Random rooted DAG: a spanning tree plus optional reentrant edges that only
/// point forward, plus constant attributes.
pub fn random_graph<R: Rng>(rng: &mut R, shape: GraphShape) -> AmrGraph {
    let pool = &CONCEPTS[..shape.concept_pool.min(CONCEPTS.len())];
    let max = if shape.distinct_concepts {
        shape.max_nodes.min(pool.len())
    } else {
        shape.max_nodes
    };
    let n = rng.gen_range(1..=max.max(1));
    let concepts: Vec<&str> = if shape.distinct_concepts {
        let mut c = pool.to_vec();
        c.shuffle(rng);
        c.truncate(n);
        c
    } else {
        (0..n).map(|_| *pool.choose(rng).unwrap()).collect()
    };
    let mut g = AmrGraph::new(var_name(0), concepts[0]);
    let mut edges: HashSet<(usize, &str, usize)> = HashSet::new();
    for (i, &concept) in concepts.iter().enumerate().skip(1) {
        g.add_node(var_name(i), concept).unwrap();
        let parent = rng.gen_range(0..i);
        let label = *LABELS.choose(rng).unwrap();
        edges.insert((parent, label, i));
        g.add_edge(var_name(parent), label, NodeRef::variable(var_name(i)));
    }
    if n > 2 {
        for _ in 0..n {
            if rng.gen_bool(shape.reentrancy) {
                let a = rng.gen_range(0..n - 1);
                let b = rng.gen_range(a + 1..n);
                let label = *LABELS.choose(rng).unwrap();
                if edges.insert((a, label, b)) {
                    g.add_edge(var_name(a), label, NodeRef::variable(var_name(b)));
                }
            }
        }
    }
    for i in 0..n {
        if rng.gen_bool(shape.attributes) {
            let (label, value) = match rng.gen_range(0..3) {
                0 => (":polarity", Constant::symbol("-")),
                1 => (":quant", Constant::number(rng.gen_range(1..5).to_string())),
                _ => (
                    ":wiki",
                    Constant::string(format!("Q{}", rng.gen_range(0..3))),
                ),
            };
            g.add_edge(var_name(i), label, NodeRef::Constant(value));
        }
    }
    g
}

/// PENMAN text with every node's children in random order.
pub fn serialize_shuffled<R: Rng>(graph: &AmrGraph, rng: &mut R) -> String {
    fn walk<R: Rng>(
        g: &AmrGraph,
        v: &str,
        printed: &mut HashSet<String>,
        rng: &mut R,
        out: &mut String,
    ) {
        printed.insert(v.to_string());
        out.push_str(&format!("({v} / {}", g.concept(v).unwrap()));
        let mut kids: Vec<(String, NodeRef)> = g
            .edges()
            .iter()
            .filter(|e| e.source == v)
            .map(|e| (e.label.clone(), e.target.clone()))
            .collect();
        kids.shuffle(rng);
        for (label, target) in kids {
            out.push_str(if rng.gen_bool(0.5) { "\n  " } else { " " });
            out.push_str(&label);
            out.push(' ');
            match target {
                NodeRef::Variable(t) if !printed.contains(&t) => walk(g, &t, printed, rng, out),
                NodeRef::Variable(t) => out.push_str(&t),
                NodeRef::Constant(c) => out.push_str(&c.to_string()),
            }
        }
        out.push(')');
    }
    let mut out = String::new();
    walk(graph, graph.root(), &mut HashSet::new(), rng, &mut out);
    out
}

/// Variables of a triple list, in first-seen order.
fn variables(triples: &[Triple]) -> Vec<String> {
    let mut seen = Vec::new();
    for t in triples {
        let mut add = |v: &String| {
            if !seen.contains(v) {
                seen.push(v.clone());
            }
        };
        add(&t.source);
        if let TripleTarget::Variable(v) = &t.target {
            add(v);
        }
    }
    seen
}

fn count_under(test: &[Triple], reference: &HashSet<Triple>, map: &HashMap<&str, &str>) -> usize {
    test.iter()
        .filter(|t| {
            let Some(s) = map.get(t.source.as_str()) else {
                return false;
            };
            let target = match &t.target {
                TripleTarget::Variable(v) => match map.get(v.as_str()) {
                    Some(w) => TripleTarget::Variable(w.to_string()),
                    None => return false,
                },
                other => other.clone(),
            };
            reference.contains(&Triple {
                label: t.label.clone(),
                source: s.to_string(),
                target,
            })
        })
        .count()
}

/// Maximum matched count over every injective partial mapping, by plain
/// enumeration.
pub fn brute_force_smatch(test: &[Triple], reference: &[Triple]) -> usize {
    let left = variables(test);
    let right = variables(reference);
    let reference: HashSet<Triple> = reference.iter().cloned().collect();
    let mut best = 0;
    let mut used = vec![false; right.len()];
    let mut map: HashMap<&str, &str> = HashMap::new();

    #[allow(clippy::too_many_arguments)]
    fn go<'a>(
        i: usize,
        left: &'a [String],
        right: &'a [String],
        used: &mut Vec<bool>,
        map: &mut HashMap<&'a str, &'a str>,
        test: &[Triple],
        reference: &HashSet<Triple>,
        best: &mut usize,
    ) {
        if i == left.len() {
            *best = (*best).max(count_under(test, reference, map));
            return;
        }
        go(i + 1, left, right, used, map, test, reference, best);
        for j in 0..right.len() {
            if !used[j] {
                used[j] = true;
                map.insert(&left[i], &right[j]);
                go(i + 1, left, right, used, map, test, reference, best);
                map.remove(left[i].as_str());
                used[j] = false;
            }
        }
    }
    go(
        0, &left, &right, &mut used, &mut map, test, &reference, &mut best,
    );
    best
}

/// Signature of an edge with variables replaced by their concepts.
fn signatures(g: &AmrGraph) -> Vec<(String, String, String)> {
    g.edges()
        .iter()
        .map(|e| {
            let child = match &e.target {
                NodeRef::Variable(v) => format!("concept:{}", g.concept(v).unwrap()),
                NodeRef::Constant(c) => format!("constant:{:?}:{}", c.kind, c.value),
            };
            (
                g.concept(&e.source).unwrap().to_string(),
                e.label.clone(),
                child,
            )
        })
        .collect()
}

/// SEMA's matched count on trees whose concepts are distinct within each
/// graph, computed by set intersection: every shared edge signature counts,
/// a non-root node counts when its incoming edge is shared and its concept
/// occurs in the reference and was not already taken by the root rule.
pub fn signature_oracle(test: &AmrGraph, reference: &AmrGraph) -> usize {
    let ref_sigs: HashSet<_> = signatures(reference).into_iter().collect();
    let test_sigs = signatures(test);
    let root_match = test.root_concept() == reference.root_concept();
    let ref_concepts: HashSet<&str> = reference.nodes().map(|(_, c)| c).collect();
    let edges_matched = test_sigs.iter().filter(|s| ref_sigs.contains(*s)).count();
    let mut instances = 0;
    for (sig, edge) in test_sigs.iter().zip(test.edges()) {
        if let NodeRef::Variable(child) = &edge.target {
            let concept = test.concept(child).unwrap();
            let taken_by_root = root_match && concept == reference.root_concept();
            if ref_sigs.contains(sig) && ref_concepts.contains(concept) && !taken_by_root {
                instances += 1;
            }
        }
    }
    usize::from(root_match) + edges_matched + instances
}

/// Random tree with concepts distinct within the graph.
pub fn random_distinct_tree<R: Rng>(rng: &mut R, max_nodes: usize, pool: usize) -> AmrGraph {
    random_graph(
        rng,
        GraphShape {
            max_nodes,
            reentrancy: 0.0,
            attributes: 0.3,
            concept_pool: pool,
            distinct_concepts: true,
        },
    )
}

/// Copy of `graph` with a few concepts renamed and labels changed.
pub fn perturb<R: Rng>(graph: &AmrGraph, rng: &mut R, rate: f64) -> AmrGraph {
    let rename = |c: &str, rng: &mut R| {
        if rng.gen_bool(rate) {
            CONCEPTS.choose(rng).unwrap().to_string()
        } else {
            c.to_string()
        }
    };
    let mut g = AmrGraph::new(graph.root(), rename(graph.root_concept(), rng));
    for (v, c) in graph.nodes().skip(1) {
        let c = rename(c, rng);
        g.add_node(v, c).unwrap();
    }
    let mut seen = HashSet::new();
    for e in graph.edges() {
        let label = if rng.gen_bool(rate) {
            LABELS.choose(rng).unwrap().to_string()
        } else {
            e.label.clone()
        };
        if seen.insert((e.source.clone(), label.clone(), e.target.clone())) {
            g.add_edge(e.source.clone(), label, e.target.clone());
        }
    }
    g
}

/// Linear chain with `nodes` nodes.
pub fn chain(nodes: usize, prefix: &str) -> AmrGraph {
    let mut g = AmrGraph::new(format!("{prefix}0"), "c0");
    for i in 1..nodes {
        g.add_node(format!("{prefix}{i}"), format!("c{}", i % 50))
            .unwrap();
        g.add_edge(
            format!("{prefix}{}", i - 1),
            ":ARG0",
            NodeRef::variable(format!("{prefix}{i}")),
        );
    }
    g
}

/// Complete tree with the given branching factor and node count.
pub fn bushy_tree(nodes: usize, branching: usize, prefix: &str) -> AmrGraph {
    let mut g = AmrGraph::new(format!("{prefix}0"), "c0");
    for i in 1..nodes {
        g.add_node(format!("{prefix}{i}"), format!("c{}", i % 50))
            .unwrap();
        let parent = (i - 1) / branching;
        let label = format!(":op{}", (i - 1) % branching + 1);
        g.add_edge(
            format!("{prefix}{parent}"),
            label,
            NodeRef::variable(format!("{prefix}{i}")),
        );
    }
    g
}

/// Like [`perturb`], but renames only to concepts unused in the graph, so
/// concepts stay distinct.
pub fn perturb_distinct<R: Rng>(graph: &AmrGraph, rng: &mut R, rate: f64) -> AmrGraph {
    let mut used: HashSet<String> = graph.nodes().map(|(_, c)| c.to_string()).collect();
    let mut rename = |c: &str, rng: &mut R| {
        let free: Vec<&&str> = CONCEPTS.iter().filter(|x| !used.contains(**x)).collect();
        if !free.is_empty() && rng.gen_bool(rate) {
            let fresh = free.choose(rng).unwrap().to_string();
            used.insert(fresh.clone());
            fresh
        } else {
            c.to_string()
        }
    };
    let mut g = AmrGraph::new(graph.root(), rename(graph.root_concept(), rng));
    for (v, c) in graph.nodes().skip(1) {
        let c = rename(c, rng);
        g.add_node(v, c).unwrap();
    }
    for e in graph.edges() {
        let label = if rng.gen_bool(rate) {
            LABELS.choose(rng).unwrap().to_string()
        } else {
            e.label.clone()
        };
        g.add_edge(e.source.clone(), label, e.target.clone());
    }
    g
}
