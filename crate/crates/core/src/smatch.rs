//! smatch: best triple overlap over one-to-one variable mappings.
//!
//! Both triple lists optionally get a `TOP (root, concept)` attribute. The
//! matched count is maximised over injective partial mappings from test to
//! reference variables, exhaustively when the smaller side has at most
//! [`SmatchConfig::exact_threshold`] variables, otherwise by hill climbing
//! with restarts.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{AmrGraph, Constant, GraphError, Triple, TripleTarget};
use crate::scalar::Scalar;
use crate::score::MatchResult;

/// Label of the root self-relation.
pub const TOP: &str = "TOP";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmatchConfig {
    pub add_top: bool,
    pub restarts: usize,
    pub seed: u64,
    /// Largest variable count of the smaller graph searched exhaustively.
    pub exact_threshold: usize,
}

impl Default for SmatchConfig {
    fn default() -> Self {
        Self {
            add_top: true,
            restarts: 4,
            seed: 0,
            exact_threshold: 8,
        }
    }
}

impl SmatchConfig {
    pub fn validate(&self) -> Result<(), SmatchError> {
        if self.restarts == 0 {
            return Err(SmatchError::InvalidConfig("restarts must be at least 1"));
        }
        if self.exact_threshold == 0 {
            return Err(SmatchError::InvalidConfig(
                "exact threshold must be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmatchError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("exhaustive search needs at most {threshold} variables on the smaller side, found {variables}")]
    ThresholdExceeded { variables: usize, threshold: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Partial one-to-one mapping from test variables to reference variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VariableMapping {
    pairs: BTreeMap<String, String>,
}

impl VariableMapping {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a pair, refusing to break injectivity.
    pub fn insert(&mut self, test: impl Into<String>, reference: impl Into<String>) -> bool {
        let reference = reference.into();
        if self.pairs.values().any(|r| *r == reference) {
            return false;
        }
        self.pairs.insert(test.into(), reference);
        true
    }

    pub fn get(&self, test: &str) -> Option<&str> {
        self.pairs.get(test).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(t, r)| (t.as_str(), r.as_str()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_injective(&self) -> bool {
        let images: HashSet<_> = self.pairs.values().collect();
        images.len() == self.pairs.len()
    }
}

/// `TOP (root, root-concept)` as an attribute triple.
pub fn top_triple(graph: &AmrGraph) -> Triple {
    Triple::attribute(TOP, graph.root(), Constant::symbol(graph.root_concept()))
}

/// Graph triples, plus the TOP triple when `add_top` is set. Sorted, so the
/// search never depends on the textual order of the input.
pub fn smatch_triples(graph: &AmrGraph, add_top: bool) -> Vec<Triple> {
    let mut triples = graph.triples();
    if add_top {
        triples.push(top_triple(graph));
    }
    triples.sort();
    triples
}

/// Test triples whose image under `mapping` is a reference triple.
pub fn matched_triples(
    test: &[Triple],
    reference: &[Triple],
    mapping: &VariableMapping,
) -> Vec<Triple> {
    let reference: HashSet<&Triple> = reference.iter().collect();
    let mut seen = HashSet::new();
    let mut matched = Vec::new();
    for triple in test {
        if !seen.insert(triple) {
            continue;
        }
        let Some(source) = mapping.get(&triple.source) else {
            continue;
        };
        let target = match &triple.target {
            TripleTarget::Variable(v) => match mapping.get(v) {
                Some(w) => TripleTarget::Variable(w.to_string()),
                None => continue,
            },
            other => other.clone(),
        };
        let image = Triple {
            label: triple.label.clone(),
            source: source.to_string(),
            target,
        };
        if reference.contains(&image) {
            matched.push(triple.clone());
        }
    }
    matched.sort();
    matched
}

pub fn smatch_score<S: Scalar>(
    test: &AmrGraph,
    reference: &AmrGraph,
    config: &SmatchConfig,
) -> Result<MatchResult<S>, SmatchError> {
    config.validate()?;
    test.check()?;
    reference.check()?;
    let test_triples = smatch_triples(test, config.add_top);
    let reference_triples = smatch_triples(reference, config.add_top);
    let smaller = test.node_count().min(reference.node_count());
    let (mapping, best) = if smaller <= config.exact_threshold {
        exact_best_mapping(&test_triples, &reference_triples, config.exact_threshold)?
    } else {
        hill_climb_mapping(
            &test_triples,
            &reference_triples,
            config.restarts,
            config.seed,
        )?
    };
    let matched = matched_triples(&test_triples, &reference_triples, &mapping);
    debug_assert_eq!(matched.len() as u64, best);
    Ok(MatchResult::from_matched(
        matched,
        test_triples.len() as u64,
        reference_triples.len() as u64,
    )
    .expect("an injective mapping matches each reference triple at most once"))
}

/// Exhaustive maximisation over injective partial mappings.
///
/// Fails when the smaller side has more than `threshold` variables.
pub fn exact_best_mapping(
    test: &[Triple],
    reference: &[Triple],
    threshold: usize,
) -> Result<(VariableMapping, u64), SmatchError> {
    let oriented = Oriented::new(test, reference);
    let variables = oriented.problem.left.len();
    if variables > threshold {
        return Err(SmatchError::ThresholdExceeded {
            variables,
            threshold,
        });
    }
    let (assignment, score) = oriented.problem.branch_and_bound();
    Ok((oriented.mapping(&assignment), score))
}

/// Seeded hill climbing with `restarts` starting points.
///
/// The first start pairs variables greedily by concept and attributes; the
/// others are random injective mappings drawn from stream `k` of a ChaCha
/// generator seeded with `seed`, so each restart is independent of the rest.
pub fn hill_climb_mapping(
    test: &[Triple],
    reference: &[Triple],
    restarts: usize,
    seed: u64,
) -> Result<(VariableMapping, u64), SmatchError> {
    if restarts == 0 {
        return Err(SmatchError::InvalidConfig("restarts must be at least 1"));
    }
    let oriented = Oriented::new(test, reference);
    let problem = &oriented.problem;
    let mut best: Option<(Vec<Option<usize>>, u64)> = None;
    for restart in 0..restarts {
        let start = if restart == 0 {
            problem.greedy_start()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(restart as u64);
            problem.random_start(&mut rng)
        };
        let (assignment, score) = problem.climb(start);
        if best.as_ref().is_none_or(|(_, s)| score > *s) {
            best = Some((assignment, score));
        }
    }
    let (assignment, score) = best.expect("at least one restart");
    Ok((oriented.mapping(&assignment), score))
}

/// Mapping problem posed from the side with fewer variables.
struct Oriented {
    problem: Problem,
    swapped: bool,
}

impl Oriented {
    fn new(test: &[Triple], reference: &[Triple]) -> Self {
        let forward = Problem::new(test, reference);
        if forward.left.len() <= forward.right.len() {
            Self {
                problem: forward,
                swapped: false,
            }
        } else {
            Self {
                problem: Problem::new(reference, test),
                swapped: true,
            }
        }
    }

    fn mapping(&self, assignment: &[Option<usize>]) -> VariableMapping {
        let mut mapping = VariableMapping::new();
        for (i, j) in assignment.iter().enumerate() {
            if let Some(j) = j {
                let left = &self.problem.left[i];
                let right = &self.problem.right[*j];
                if self.swapped {
                    mapping.insert(right.clone(), left.clone());
                } else {
                    mapping.insert(left.clone(), right.clone());
                }
            }
        }
        mapping
    }
}

/// Variables are indexed in sorted name order on both sides so that results
/// do not depend on triple order.
struct Problem {
    left: Vec<String>,
    right: Vec<String>,
    /// Instance and attribute matches of pair (i, j), row-major.
    unary: Vec<u64>,
    left_relations: Vec<(usize, usize, usize)>,
    right_relations: HashSet<(usize, usize, usize)>,
    incident: Vec<Vec<usize>>,
    /// Right variables that can contribute anything when paired with `i`.
    candidates: Vec<Vec<usize>>,
}

fn variables_of(triples: &[Triple]) -> Vec<String> {
    let mut vars = BTreeSet::new();
    for t in triples {
        vars.insert(t.source.clone());
        if let TripleTarget::Variable(v) = &t.target {
            vars.insert(v.clone());
        }
    }
    vars.into_iter().collect()
}

impl Problem {
    fn new(left_triples: &[Triple], right_triples: &[Triple]) -> Self {
        let left = variables_of(left_triples);
        let right = variables_of(right_triples);
        let left_index: HashMap<&str, usize> = left
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let right_index: HashMap<&str, usize> = right
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let mut labels: HashMap<&str, usize> = HashMap::new();

        // Per-variable unary features: concept or (label, constant).
        type Feature<'a> = (&'a str, &'a TripleTarget);
        let mut left_features: Vec<BTreeSet<Feature>> = vec![BTreeSet::new(); left.len()];
        let mut right_features: Vec<BTreeSet<Feature>> = vec![BTreeSet::new(); right.len()];
        let mut left_relations = BTreeSet::new();
        let mut right_relations = HashSet::new();
        let mut left_out: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); left.len()];
        let mut left_in: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); left.len()];
        let mut right_out: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); right.len()];
        let mut right_in: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); right.len()];

        for (triples, index, features, out, inc, is_left) in [
            (
                left_triples,
                &left_index,
                &mut left_features,
                &mut left_out,
                &mut left_in,
                true,
            ),
            (
                right_triples,
                &right_index,
                &mut right_features,
                &mut right_out,
                &mut right_in,
                false,
            ),
        ] {
            for t in triples {
                let s = index[t.source.as_str()];
                match &t.target {
                    TripleTarget::Variable(v) => {
                        let next = labels.len();
                        let label = *labels.entry(t.label.as_str()).or_insert(next);
                        let o = index[v.as_str()];
                        out[s].insert(label);
                        inc[o].insert(label);
                        if is_left {
                            left_relations.insert((s, label, o));
                        } else {
                            right_relations.insert((s, label, o));
                        }
                    }
                    target => {
                        features[s].insert((t.label.as_str(), target));
                    }
                }
            }
        }

        let mut unary = vec![0u64; left.len() * right.len()];
        let mut candidates = vec![Vec::new(); left.len()];
        for i in 0..left.len() {
            for j in 0..right.len() {
                let shared = left_features[i].intersection(&right_features[j]).count() as u64;
                unary[i * right.len() + j] = shared;
                let structural = !left_out[i].is_disjoint(&right_out[j])
                    || !left_in[i].is_disjoint(&right_in[j]);
                if shared > 0 || structural {
                    candidates[i].push(j);
                }
            }
        }

        let left_relations: Vec<_> = left_relations.into_iter().collect();
        let mut incident = vec![Vec::new(); left.len()];
        for (r, &(s, _, o)) in left_relations.iter().enumerate() {
            incident[s].push(r);
            if o != s {
                incident[o].push(r);
            }
        }

        Self {
            left,
            right,
            unary,
            left_relations,
            right_relations,
            incident,
            candidates,
        }
    }

    fn unary(&self, i: usize, j: usize) -> u64 {
        self.unary[i * self.right.len() + j]
    }

    fn relation_holds(&self, r: usize, assignment: &[Option<usize>]) -> bool {
        let (s, label, o) = self.left_relations[r];
        match (assignment[s], assignment[o]) {
            (Some(a), Some(b)) => self.right_relations.contains(&(a, label, b)),
            _ => false,
        }
    }

    fn score(&self, assignment: &[Option<usize>]) -> u64 {
        let unary: u64 = assignment
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| self.unary(i, j)))
            .sum();
        let relations = (0..self.left_relations.len())
            .filter(|&r| self.relation_holds(r, assignment))
            .count() as u64;
        unary + relations
    }

    /// Score terms that involve any of `vars`.
    fn local_score(&self, assignment: &[Option<usize>], vars: &[usize]) -> u64 {
        let mut total = 0;
        let mut relations: Vec<usize> = Vec::new();
        for &i in vars {
            if let Some(j) = assignment[i] {
                total += self.unary(i, j);
            }
            relations.extend_from_slice(&self.incident[i]);
        }
        relations.sort_unstable();
        relations.dedup();
        total
            + relations
                .iter()
                .filter(|&&r| self.relation_holds(r, assignment))
                .count() as u64
    }

    fn branch_and_bound(&self) -> (Vec<Option<usize>>, u64) {
        let n = self.left.len();
        // Most constrained variables first.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (self.candidates[i].len(), i));
        let mut position = vec![0; n];
        for (p, &i) in order.iter().enumerate() {
            position[i] = p;
        }
        // Relations are credited when their later endpoint is assigned.
        let mut closing: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (r, &(s, _, o)) in self.left_relations.iter().enumerate() {
            let last = if position[s] >= position[o] { s } else { o };
            closing[last].push(r);
        }
        let mut suffix_bound = vec![0u64; n + 1];
        for p in (0..n).rev() {
            let i = order[p];
            let best_unary = self.candidates[i]
                .iter()
                .map(|&j| self.unary(i, j))
                .max()
                .unwrap_or(0);
            suffix_bound[p] = suffix_bound[p + 1] + best_unary + closing[i].len() as u64;
        }

        struct Search<'p> {
            problem: &'p Problem,
            order: Vec<usize>,
            closing: Vec<Vec<usize>>,
            suffix_bound: Vec<u64>,
            assignment: Vec<Option<usize>>,
            used: Vec<bool>,
            best: (Vec<Option<usize>>, u64),
        }

        impl Search<'_> {
            fn gain(&self, i: usize) -> u64 {
                let unary = self.assignment[i].map_or(0, |j| self.problem.unary(i, j));
                unary
                    + self.closing[i]
                        .iter()
                        .filter(|&&r| self.problem.relation_holds(r, &self.assignment))
                        .count() as u64
            }

            fn descend(&mut self, depth: usize, score: u64) {
                if score > self.best.1 {
                    self.best = (self.assignment.clone(), score);
                }
                if depth == self.order.len() || score + self.suffix_bound[depth] <= self.best.1 {
                    return;
                }
                let i = self.order[depth];
                for k in 0..self.problem.candidates[i].len() {
                    let j = self.problem.candidates[i][k];
                    if self.used[j] {
                        continue;
                    }
                    self.used[j] = true;
                    self.assignment[i] = Some(j);
                    let gain = self.gain(i);
                    self.descend(depth + 1, score + gain);
                    self.assignment[i] = None;
                    self.used[j] = false;
                }
                self.descend(depth + 1, score);
            }
        }

        let mut search = Search {
            problem: self,
            order,
            closing,
            suffix_bound,
            assignment: vec![None; n],
            used: vec![false; self.right.len()],
            best: (vec![None; n], 0),
        };
        search.descend(0, 0);
        search.best
    }

    fn greedy_start(&self) -> Vec<Option<usize>> {
        let mut used = vec![false; self.right.len()];
        let mut assignment = vec![None; self.left.len()];
        for (i, slot) in assignment.iter_mut().enumerate() {
            let mut pick: Option<(usize, u64)> = None;
            for &j in &self.candidates[i] {
                let u = self.unary(i, j);
                if !used[j] && u > 0 && pick.is_none_or(|(_, best)| u > best) {
                    pick = Some((j, u));
                }
            }
            if let Some((j, _)) = pick {
                used[j] = true;
                *slot = Some(j);
            }
        }
        assignment
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<Option<usize>> {
        let mut used = vec![false; self.right.len()];
        let mut assignment = vec![None; self.left.len()];
        let mut order: Vec<usize> = (0..self.left.len()).collect();
        order.shuffle(rng);
        for i in order {
            let mut options = self.candidates[i].clone();
            options.shuffle(rng);
            if let Some(&j) = options.iter().find(|&&j| !used[j]) {
                used[j] = true;
                assignment[i] = Some(j);
            }
        }
        assignment
    }

    /// Best-improvement local search over single moves and swaps.
    fn climb(&self, mut assignment: Vec<Option<usize>>) -> (Vec<Option<usize>>, u64) {
        let mut owner: Vec<Option<usize>> = vec![None; self.right.len()];
        for (i, j) in assignment.iter().enumerate() {
            if let Some(j) = j {
                owner[*j] = Some(i);
            }
        }
        let mut score = self.score(&assignment);
        loop {
            let mut best: Option<(i64, usize, Option<usize>)> = None;
            for i in 0..self.left.len() {
                let current = assignment[i];
                let options = self.candidates[i]
                    .iter()
                    .map(|&j| Some(j))
                    .chain(std::iter::once(None));
                for target in options {
                    if target == current {
                        continue;
                    }
                    let delta = self.move_delta(&mut assignment, &owner, i, target);
                    if delta > 0 && best.is_none_or(|(d, _, _)| delta > d) {
                        best = Some((delta, i, target));
                    }
                }
            }
            let Some((delta, i, target)) = best else {
                break;
            };
            let previous = assignment[i];
            if let Some(j) = target {
                if let Some(k) = owner[j] {
                    assignment[k] = previous;
                    if let Some(p) = previous {
                        owner[p] = Some(k);
                    }
                } else if let Some(p) = previous {
                    owner[p] = None;
                }
                owner[j] = Some(i);
            } else if let Some(p) = previous {
                owner[p] = None;
            }
            assignment[i] = target;
            score = (score as i64 + delta) as u64;
            debug_assert_eq!(score, self.score(&assignment));
        }
        (assignment, score)
    }

    /// Score change of giving `i` the image `target`, swapping with its
    /// current owner if taken. `assignment` is restored before returning.
    fn move_delta(
        &self,
        assignment: &mut [Option<usize>],
        owner: &[Option<usize>],
        i: usize,
        target: Option<usize>,
    ) -> i64 {
        let other = target.and_then(|j| owner[j]);
        let affected: Vec<usize> = match other {
            Some(k) => vec![i, k],
            None => vec![i],
        };
        let before = self.local_score(assignment, &affected) as i64;
        let previous = assignment[i];
        if let Some(k) = other {
            assignment[k] = previous;
        }
        assignment[i] = target;
        let after = self.local_score(assignment, &affected) as i64;
        assignment[i] = previous;
        if let Some(k) = other {
            assignment[k] = target;
        }
        after - before
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::parse_penman;
    use crate::Exact;

    fn graph(s: &str) -> AmrGraph {
        parse_penman(s).unwrap()
    }

    #[test]
    fn identity_is_optimal() {
        let g = graph("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b :polarity -))");
        let r: MatchResult<Exact> = smatch_score(&g, &g, &SmatchConfig::default()).unwrap();
        assert_eq!(r.matched_count, 8);
        assert_eq!(r.test_count, 8);
        assert_eq!(r.summary(), "P=1.00 R=1.00 F=1.00");
    }

    #[test]
    fn disjoint_concepts_match_only_top_free() {
        let a = graph("(a / alpha :ARG0 (b / beta))");
        let b = graph("(x / gamma :ARG1 (y / delta))");
        let t = smatch_triples(&a, true);
        let r = smatch_triples(&b, true);
        let (_, m) = exact_best_mapping(&t, &r, 8).unwrap();
        assert_eq!(m, 0);
    }

    #[test]
    fn identical_three_node_graphs() {
        let g = graph("(a / adjust-01 :ARG0 (g / girl) :ARG1 (m / machine))");
        let t = smatch_triples(&g, true);
        let (mapping, m) = exact_best_mapping(&t, &t, 8).unwrap();
        assert_eq!(m, 6);
        assert_eq!(mapping.get("g"), Some("g"));
    }

    #[test]
    fn two_same_concept_variables() {
        // Hand enumeration: mapping d1→e1, d2→e2 gives the two dog instances,
        // the root instance, TOP, and ARG0 (r, d1); ARG1 cannot also match
        // because the reference has ARG1 to a cat. 5 in total.
        let test = graph("(r / run-01 :ARG0 (d1 / dog) :ARG1 (d2 / dog))");
        let reference = graph("(r / run-01 :ARG0 (e1 / dog) :ARG1 (c / cat) :ARG2 (e2 / dog))");
        let t = smatch_triples(&test, true);
        let r = smatch_triples(&reference, true);
        let (mapping, m) = exact_best_mapping(&t, &r, 8).unwrap();
        assert_eq!(m, 5);
        assert_eq!(mapping.get("d1"), Some("e1"));
        assert_eq!(matched_triples(&t, &r, &mapping).len(), 5);
    }

    #[test]
    fn threshold_is_enforced() {
        let g = graph("(a / x :ARG0 (b / y :ARG0 (c / z)))");
        let t = smatch_triples(&g, false);
        assert_eq!(
            exact_best_mapping(&t, &t, 2),
            Err(SmatchError::ThresholdExceeded {
                variables: 3,
                threshold: 2
            })
        );
    }

    #[test]
    fn top_distinguishes_root_choice() {
        let test = graph("(b / bark-01 :ARG0 (d / dog))");
        let reference = graph("(d / dog :ARG0-of (b / bark-01))");
        let with: MatchResult<Exact> =
            smatch_score(&test, &reference, &SmatchConfig::default()).unwrap();
        let without: MatchResult<Exact> = smatch_score(
            &test,
            &reference,
            &SmatchConfig {
                add_top: false,
                ..SmatchConfig::default()
            },
        )
        .unwrap();
        assert_eq!(with.matched_count, 2);
        assert_eq!(with.test_count, 4);
        assert_eq!(without.matched_count, 2);
        assert_eq!(without.test_count, 3);
    }

    #[test]
    fn hill_climb_is_deterministic() {
        let a = graph("(a / and :op1 (b / x :ARG0 (c / y)) :op2 (d / x :ARG0 (e / y)))");
        let b = graph("(a / and :op1 (b / x :ARG0 (c / z)) :op2 (d / x :ARG0 (e / y)))");
        let t = smatch_triples(&a, true);
        let r = smatch_triples(&b, true);
        let first = hill_climb_mapping(&t, &r, 4, 7).unwrap();
        let second = hill_climb_mapping(&t, &r, 4, 7).unwrap();
        assert_eq!(first, second);
        let (_, exact) = exact_best_mapping(&t, &r, 8).unwrap();
        assert!(first.1 <= exact);
    }

    #[test]
    fn zero_restarts_rejected() {
        let g = graph("(a / x)");
        let t = smatch_triples(&g, true);
        assert!(hill_climb_mapping(&t, &t, 0, 0).is_err());
        let bad = SmatchConfig {
            restarts: 0,
            ..SmatchConfig::default()
        };
        assert!(smatch_score::<Exact>(&g, &g, &bad).is_err());
    }

    #[test]
    fn mapping_stays_injective() {
        let mut m = VariableMapping::new();
        assert!(m.insert("a", "x"));
        assert!(!m.insert("b", "x"));
        assert!(m.is_injective());
        assert_eq!(m.len(), 1);
    }
}
