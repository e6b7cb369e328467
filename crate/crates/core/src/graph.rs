//! AMR graph data model and triple extraction.
//!
//! An [`AmrGraph`] is a rooted, labeled digraph. Nodes are variables carrying a
//! concept; edges go from a variable to another variable or to a constant.
//! Relation labels keep their leading `:`.

use std::cmp::Ordering;
use std::collections::{HashSet, VecDeque};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pseudo-label of instance triples.
pub const INSTANCE: &str = "instance";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantKind {
    /// Quoted string, stored without quotes.
    String,
    Number,
    /// Bare symbol such as `-`, `+` or `imperative`.
    Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Constant {
    pub kind: ConstantKind,
    pub value: String,
}

impl Constant {
    pub fn new(kind: ConstantKind, value: impl Into<String>) -> Self {
        Self {
            kind,
            value: value.into(),
        }
    }

    pub fn string(value: impl Into<String>) -> Self {
        Self::new(ConstantKind::String, value)
    }

    pub fn symbol(value: impl Into<String>) -> Self {
        Self::new(ConstantKind::Symbol, value)
    }

    pub fn number(value: impl Into<String>) -> Self {
        Self::new(ConstantKind::Number, value)
    }

    /// Classifies an unquoted token.
    pub fn bare(token: &str) -> Self {
        let digits = token.trim_start_matches(['-', '+']).trim_start_matches('.');
        let numeric_start = digits.starts_with(|c: char| c.is_ascii_digit());
        if numeric_start && token.parse::<f64>().is_ok() {
            Self::number(token)
        } else {
            Self::symbol(token)
        }
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ConstantKind::String => {
                f.write_str("\"")?;
                for c in self.value.chars() {
                    if c == '"' || c == '\\' {
                        f.write_str("\\")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("\"")
            }
            ConstantKind::Number | ConstantKind::Symbol => f.write_str(&self.value),
        }
    }
}

/// Target of an edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeRef {
    Variable(String),
    Constant(Constant),
}

impl NodeRef {
    pub fn variable(name: impl Into<String>) -> Self {
        NodeRef::Variable(name.into())
    }

    pub fn as_variable(&self) -> Option<&str> {
        match self {
            NodeRef::Variable(v) => Some(v),
            NodeRef::Constant(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: String,
    pub label: String,
    pub target: NodeRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    concept: String,
    out: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("variable `{0}` is already declared")]
    DuplicateVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownNode(String),
    #[error("malformed graph: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Malformed(Vec<Violation>),
}

/// Structural problem found by [`AmrGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Unreachable(String),
    UndeclaredTarget {
        source: String,
        label: String,
        target: String,
    },
    UndeclaredSource {
        source: String,
        label: String,
    },
    DuplicateEdge(Edge),
    /// Warning only: a directed cycle through the named variable.
    Cycle(String),
}

impl Violation {
    /// Cycles are tolerated; everything else makes the graph unusable.
    pub fn is_error(&self) -> bool {
        !matches!(self, Violation::Cycle(_))
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Unreachable(v) => write!(f, "unreachable node `{v}`"),
            Violation::UndeclaredTarget {
                source,
                label,
                target,
            } => write!(f, "undeclared target `{target}` of {source} {label}"),
            Violation::UndeclaredSource { source, label } => {
                write!(f, "undeclared source `{source}` of {label}")
            }
            Violation::DuplicateEdge(e) => {
                write!(f, "duplicate edge {} {} {:?}", e.source, e.label, e.target)
            }
            Violation::Cycle(v) => write!(f, "cycle through `{v}`"),
        }
    }
}

/// Single-rooted AMR graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmrGraph {
    root: String,
    nodes: IndexMap<String, Node>,
    edges: Vec<Edge>,
}

impl AmrGraph {
    /// Creates a graph holding only its root node.
    pub fn new(root: impl Into<String>, concept: impl Into<String>) -> Self {
        let root = root.into();
        let mut nodes = IndexMap::new();
        nodes.insert(
            root.clone(),
            Node {
                concept: concept.into(),
                out: Vec::new(),
            },
        );
        Self {
            root,
            nodes,
            edges: Vec::new(),
        }
    }

    pub fn add_node(
        &mut self,
        variable: impl Into<String>,
        concept: impl Into<String>,
    ) -> Result<(), GraphError> {
        let variable = variable.into();
        if self.nodes.contains_key(&variable) {
            return Err(GraphError::DuplicateVariable(variable));
        }
        self.nodes.insert(
            variable,
            Node {
                concept: concept.into(),
                out: Vec::new(),
            },
        );
        Ok(())
    }

    /// Appends an edge without checking it; see [`AmrGraph::validate`].
    ///
    /// An edge whose source is not a node is kept in the edge list but is not
    /// reachable from any node.
    pub fn add_edge(
        &mut self,
        source: impl Into<String>,
        label: impl Into<String>,
        target: NodeRef,
    ) {
        let source = source.into();
        let index = self.edges.len();
        if let Some(node) = self.nodes.get_mut(&source) {
            node.out.push(index);
        }
        self.edges.push(Edge {
            source,
            label: label.into(),
            target,
        });
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn root_concept(&self) -> &str {
        &self.nodes[&self.root].concept
    }

    pub fn concept(&self, variable: &str) -> Option<&str> {
        self.nodes.get(variable).map(|n| n.concept.as_str())
    }

    pub fn contains(&self, variable: &str) -> bool {
        self.nodes.contains_key(variable)
    }

    /// Variables with their concepts, in insertion order.
    pub fn nodes(&self) -> impl Iterator<Item = (&str, &str)> {
        self.nodes
            .iter()
            .map(|(v, n)| (v.as_str(), n.concept.as_str()))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Number of edges, i.e. relation plus attribute triples.
    pub fn relation_count(&self) -> usize {
        self.edges.len()
    }

    /// Outgoing edges of `variable` in canonical order: by label, then by the
    /// target's concept or constant value, then by target variable name.
    pub fn children(&self, variable: &str) -> Result<Vec<(&str, &NodeRef)>, GraphError> {
        let node = self
            .nodes
            .get(variable)
            .ok_or_else(|| GraphError::UnknownNode(variable.to_string()))?;
        let mut out: Vec<&Edge> = node.out.iter().map(|&i| &self.edges[i]).collect();
        out.sort_by(|a, b| self.canonical_cmp(a, b));
        Ok(out
            .into_iter()
            .map(|e| (e.label.as_str(), &e.target))
            .collect())
    }

    fn canonical_cmp(&self, a: &Edge, b: &Edge) -> Ordering {
        a.label
            .cmp(&b.label)
            .then_with(|| self.target_key(&a.target).cmp(&self.target_key(&b.target)))
    }

    fn target_key<'a>(&'a self, target: &'a NodeRef) -> (&'a str, u8, &'a str) {
        match target {
            NodeRef::Variable(v) => (self.concept(v).unwrap_or(""), 0, v.as_str()),
            NodeRef::Constant(c) => (c.value.as_str(), 1 + c.kind as u8, ""),
        }
    }

    /// All triples: one instance triple per node, then one per edge.
    pub fn triples(&self) -> Vec<Triple> {
        let mut triples = Vec::with_capacity(self.nodes.len() + self.edges.len());
        for (v, node) in &self.nodes {
            triples.push(Triple::instance(v.clone(), node.concept.clone()));
        }
        for e in &self.edges {
            let target = match &e.target {
                NodeRef::Variable(v) => TripleTarget::Variable(v.clone()),
                NodeRef::Constant(c) => TripleTarget::Constant(c.clone()),
            };
            triples.push(Triple {
                label: e.label.clone(),
                source: e.source.clone(),
                target,
            });
        }
        triples
    }

    /// Collects every structural violation. An empty list means the graph is
    /// well formed; [`Violation::Cycle`] entries are warnings.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        let mut seen = HashSet::with_capacity(self.edges.len());
        for e in &self.edges {
            if !self.nodes.contains_key(&e.source) {
                violations.push(Violation::UndeclaredSource {
                    source: e.source.clone(),
                    label: e.label.clone(),
                });
            }
            if let NodeRef::Variable(t) = &e.target {
                if !self.nodes.contains_key(t) {
                    violations.push(Violation::UndeclaredTarget {
                        source: e.source.clone(),
                        label: e.label.clone(),
                        target: t.clone(),
                    });
                }
            }
            if !seen.insert((&e.source, &e.label, &e.target)) {
                violations.push(Violation::DuplicateEdge(e.clone()));
            }
        }

        let mut reached = vec![false; self.nodes.len()];
        let mut queue = VecDeque::new();
        let root = self.nodes.get_index_of(&self.root).expect("root is a node");
        reached[root] = true;
        queue.push_back(root);
        while let Some(i) = queue.pop_front() {
            for t in self.variable_targets(i) {
                if !reached[t] {
                    reached[t] = true;
                    queue.push_back(t);
                }
            }
        }
        for (i, (v, _)) in self.nodes.iter().enumerate() {
            if !reached[i] {
                violations.push(Violation::Unreachable(v.clone()));
            }
        }

        violations.extend(self.find_cycles().into_iter().map(Violation::Cycle));
        violations
    }

    /// Errors out if [`AmrGraph::validate`] reports any hard violation.
    pub fn check(&self) -> Result<(), GraphError> {
        let errors: Vec<_> = self
            .validate()
            .into_iter()
            .filter(Violation::is_error)
            .collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(GraphError::Malformed(errors))
        }
    }

    fn variable_targets(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        self.nodes[index]
            .out
            .iter()
            .filter_map(|&e| self.edges[e].target.as_variable())
            .filter_map(|v| self.nodes.get_index_of(v))
    }

    /// One variable per back edge found by an iterative depth-first search.
    fn find_cycles(&self) -> Vec<String> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let n = self.nodes.len();
        let mut mark = vec![Mark::New; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            if mark[start] != Mark::New {
                continue;
            }
            let mut stack: Vec<(usize, Vec<usize>)> =
                vec![(start, self.variable_targets(start).collect())];
            mark[start] = Mark::Active;
            while let Some((node, pending)) = stack.last_mut() {
                match pending.pop() {
                    Some(next) => match mark[next] {
                        Mark::New => {
                            mark[next] = Mark::Active;
                            let targets = self.variable_targets(next).collect();
                            stack.push((next, targets));
                        }
                        Mark::Active => cycles.push(self.nodes.get_index(next).unwrap().0.clone()),
                        Mark::Done => {}
                    },
                    None => {
                        mark[*node] = Mark::Done;
                        stack.pop();
                    }
                }
            }
        }
        cycles
    }
}

/// Form of a triple, determined by its label and second argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TripleForm {
    /// `instance (variable, concept)`
    Instance,
    /// `relation (variable1, variable2)`
    Relation,
    /// `relation (variable, constant)`
    Attribute,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TripleTarget {
    Concept(String),
    Variable(String),
    Constant(Constant),
}

/// One proposition of a graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub label: String,
    pub source: String,
    pub target: TripleTarget,
}

impl Triple {
    pub fn instance(variable: impl Into<String>, concept: impl Into<String>) -> Self {
        Self {
            label: INSTANCE.to_string(),
            source: variable.into(),
            target: TripleTarget::Concept(concept.into()),
        }
    }

    pub fn relation(
        label: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
    ) -> Self {
        Self {
            label: label.into(),
            source: source.into(),
            target: TripleTarget::Variable(target.into()),
        }
    }

    pub fn attribute(label: impl Into<String>, source: impl Into<String>, value: Constant) -> Self {
        Self {
            label: label.into(),
            source: source.into(),
            target: TripleTarget::Constant(value),
        }
    }

    pub fn form(&self) -> TripleForm {
        match self.target {
            TripleTarget::Concept(_) => TripleForm::Instance,
            TripleTarget::Variable(_) => TripleForm::Relation,
            TripleTarget::Constant(_) => TripleForm::Attribute,
        }
    }
}

/// Renders as `label (arg1, arg2)`, e.g. `polarity (e, '-')`.
impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = self.label.strip_prefix(':').unwrap_or(&self.label);
        write!(f, "{label} ({}, ", self.source)?;
        match &self.target {
            TripleTarget::Concept(c) => write!(f, "{c})"),
            TripleTarget::Variable(v) => write!(f, "{v})"),
            TripleTarget::Constant(c) if c.kind == ConstantKind::String => write!(f, "{c})"),
            TripleTarget::Constant(c) => write!(f, "'{}')", c.value),
        }
    }
}
