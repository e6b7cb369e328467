//! Corpus evaluation: pair test and gold corpora, score every pair, aggregate
//! and report.
//!
//! Micro aggregates come from summed M, C and T; macro aggregates average the
//! per-entry scores. Test entries that failed to parse (or are missing) score
//! M = 0 and C = 0 against the gold T, so they cost recall but not precision.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::AmrGraph;
use crate::penman::CorpusItem;
use crate::scalar::{Exact, Scalar};
use crate::score::{f_score, MatchResult, Prf};
use crate::sema::sema_score;
use crate::smatch::{smatch_score, SmatchConfig, SmatchError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Sema,
    Smatch,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Sema, Metric::Smatch];

    pub fn key(self) -> &'static str {
        match self {
            Metric::Sema => "sema",
            Metric::Smatch => "smatch",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Metric::Sema => "SEMA",
            Metric::Smatch => "smatch",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sema" => Ok(Metric::Sema),
            "smatch" => Ok(Metric::Smatch),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("duplicate id `{id}` in the {side} corpus")]
    DuplicateId { id: String, side: &'static str },
    #[error("nothing to evaluate")]
    EmptyCorpus,
    #[error("report has no scored entries")]
    EmptyReport,
    #[error("no metric selected")]
    NoMetric,
    #[error(transparent)]
    Smatch(#[from] SmatchError),
}

#[derive(Debug, Clone)]
pub enum TestSide {
    Graph(AmrGraph),
    Failed(String),
    Missing,
}

#[derive(Debug, Clone)]
pub enum GoldSide {
    Graph(AmrGraph),
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct Pair {
    pub id: String,
    pub test: TestSide,
    pub gold: GoldSide,
}

#[derive(Debug, Clone)]
pub struct Pairing {
    pub pairs: Vec<Pair>,
    /// Test entries with no gold counterpart; not scored.
    pub unmatched_test: Vec<String>,
    /// Gold entries with no test counterpart; scored as empty output.
    pub missing_test: Vec<String>,
    pub by_id: bool,
}

fn item_id(item: &CorpusItem) -> Option<&str> {
    match item {
        Ok(entry) => entry.id(),
        Err(error) => error.id.as_deref(),
    }
}

fn test_side(item: &CorpusItem) -> TestSide {
    match item {
        Ok(entry) => TestSide::Graph(entry.graph.clone()),
        Err(error) => TestSide::Failed(error.to_string()),
    }
}

fn gold_side(item: &CorpusItem) -> GoldSide {
    match item {
        Ok(entry) => GoldSide::Graph(entry.graph.clone()),
        Err(error) => GoldSide::Failed(error.to_string()),
    }
}

/// Orders ids with embedded numbers numerically, so `2` sorts before `10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for ((da, sa), (db, sb)) in ca.iter().zip(cb.iter()) {
        let ord = if *da && *db {
            let ta = sa.trim_start_matches('0');
            let tb = sb.trim_start_matches('0');
            ta.len().cmp(&tb.len()).then_with(|| ta.cmp(tb))
        } else {
            sa.cmp(sb)
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

/// Pairs entries by id when every entry on both sides has one, otherwise by
/// position. Id-paired results are ordered by id.
pub fn pair_corpora(test: &[CorpusItem], gold: &[CorpusItem]) -> Result<Pairing, HarnessError> {
    let by_id = !test.is_empty()
        && !gold.is_empty()
        && test.iter().chain(gold.iter()).all(|i| item_id(i).is_some());
    if by_id {
        let mut test_by_id = BTreeMap::new();
        for item in test {
            let id = item_id(item).unwrap();
            if test_by_id.insert(id, item).is_some() {
                return Err(HarnessError::DuplicateId {
                    id: id.to_string(),
                    side: "test",
                });
            }
        }
        let mut seen = HashSet::new();
        let mut pairs = Vec::with_capacity(gold.len());
        let mut missing_test = Vec::new();
        for item in gold {
            let id = item_id(item).unwrap();
            if !seen.insert(id) {
                return Err(HarnessError::DuplicateId {
                    id: id.to_string(),
                    side: "gold",
                });
            }
            let test_side = match test_by_id.get(id) {
                Some(t) => test_side(t),
                None => {
                    missing_test.push(id.to_string());
                    TestSide::Missing
                }
            };
            pairs.push(Pair {
                id: id.to_string(),
                test: test_side,
                gold: gold_side(item),
            });
        }
        pairs.sort_by(|a, b| natural_cmp(&a.id, &b.id));
        missing_test.sort_by(|a, b| natural_cmp(a, b));
        let mut unmatched_test: Vec<String> = test_by_id
            .keys()
            .filter(|id| !seen.contains(*id))
            .map(|id| id.to_string())
            .collect();
        unmatched_test.sort_by(|a, b| natural_cmp(a, b));
        return Ok(Pairing {
            pairs,
            unmatched_test,
            missing_test,
            by_id,
        });
    }

    let mut pairs = Vec::with_capacity(gold.len());
    let mut missing_test = Vec::new();
    for (index, item) in gold.iter().enumerate() {
        let id = item_id(item).map_or_else(|| (index + 1).to_string(), str::to_string);
        let test_side = match test.get(index) {
            Some(t) => test_side(t),
            None => {
                missing_test.push(id.clone());
                TestSide::Missing
            }
        };
        pairs.push(Pair {
            id,
            test: test_side,
            gold: gold_side(item),
        });
    }
    let unmatched_test = test
        .iter()
        .enumerate()
        .skip(gold.len())
        .map(|(index, item)| item_id(item).map_or_else(|| (index + 1).to_string(), str::to_string))
        .collect();
    Ok(Pairing {
        pairs,
        unmatched_test,
        missing_test,
        by_id: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryResult<S = Exact> {
    pub id: String,
    pub results: BTreeMap<Metric, MatchResult<S>>,
    /// Relation count of the gold graph, when it parsed.
    pub relations: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate<S = Exact> {
    pub entries: usize,
    pub matched: u64,
    pub test: u64,
    pub reference: u64,
    pub micro: Prf<S>,
    pub macro_avg: Prf<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits<S = Exact> {
    pub average_relations: S,
    pub below: CorpusReport<S>,
    pub above: CorpusReport<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusReport<S = Exact> {
    pub metrics: Vec<Metric>,
    pub entries: Vec<EntryResult<S>>,
    pub aggregates: BTreeMap<Metric, Aggregate<S>>,
    pub splits: Option<Box<Splits<S>>>,
}

impl<S: Scalar> CorpusReport<S> {
    /// Aggregates `entries`; entries without a result for a metric are skipped
    /// for that metric.
    pub fn from_entries(metrics: Vec<Metric>, entries: Vec<EntryResult<S>>) -> Self {
        let mut aggregates = BTreeMap::new();
        for &metric in &metrics {
            let scored: Vec<&MatchResult<S>> = entries
                .iter()
                .filter_map(|e| e.results.get(&metric))
                .collect();
            let matched = scored.iter().map(|r| r.matched_count).sum();
            let test = scored.iter().map(|r| r.test_count).sum();
            let reference = scored.iter().map(|r| r.reference_count).sum();
            let micro = f_score(matched, test, reference).expect("sums of valid counts");
            let macro_avg = if scored.is_empty() {
                Prf::zero()
            } else {
                let n = S::from_count(scored.len() as u64);
                let mean = |get: fn(&Prf<S>) -> &S| {
                    scored
                        .iter()
                        .fold(S::zero(), |acc, r| acc + get(&r.scores).clone())
                        / n.clone()
                };
                Prf {
                    precision: mean(|p| &p.precision),
                    recall: mean(|p| &p.recall),
                    f_score: mean(|p| &p.f_score),
                }
            };
            aggregates.insert(
                metric,
                Aggregate {
                    entries: scored.len(),
                    matched,
                    test,
                    reference,
                    micro,
                    macro_avg,
                },
            );
        }
        Self {
            metrics,
            entries,
            aggregates,
            splits: None,
        }
    }

    pub fn scored_entries(&self) -> impl Iterator<Item = &EntryResult<S>> {
        self.entries.iter().filter(|e| e.relations.is_some())
    }

    /// Attaches the below/above-average split to the report.
    pub fn with_splits(mut self) -> Result<Self, HarnessError> {
        let (average_relations, below, above) = split_parts(&self)?;
        self.splits = Some(Box::new(Splits {
            average_relations,
            below,
            above,
        }));
        Ok(self)
    }
}

fn score_entry<S: Scalar>(
    pair: &Pair,
    metrics: &[Metric],
    config: &SmatchConfig,
) -> EntryResult<S> {
    let gold = match &pair.gold {
        GoldSide::Graph(g) => g,
        GoldSide::Failed(message) => {
            return EntryResult {
                id: pair.id.clone(),
                results: BTreeMap::new(),
                relations: None,
                error: Some(format!("gold: {message}")),
            }
        }
    };
    let gold_triples = |metric: Metric| {
        let base = (gold.node_count() + gold.relation_count()) as u64;
        match metric {
            Metric::Smatch if config.add_top => base + 1,
            _ => base,
        }
    };
    let mut results = BTreeMap::new();
    let mut error = match &pair.test {
        TestSide::Graph(_) => None,
        TestSide::Failed(message) => Some(format!("test: {message}")),
        TestSide::Missing => Some("test: missing".to_string()),
    };
    for &metric in metrics {
        let result = match &pair.test {
            TestSide::Graph(test) => {
                let scored = match metric {
                    Metric::Sema => sema_score(test, gold).map_err(|e| e.to_string()),
                    Metric::Smatch => smatch_score(test, gold, config).map_err(|e| e.to_string()),
                };
                match scored {
                    Ok(r) => r,
                    Err(message) => {
                        error.get_or_insert(format!("{metric}: {message}"));
                        MatchResult::unmatched(0, gold_triples(metric))
                    }
                }
            }
            TestSide::Failed(_) | TestSide::Missing => {
                MatchResult::unmatched(0, gold_triples(metric))
            }
        };
        results.insert(metric, result);
    }
    EntryResult {
        id: pair.id.clone(),
        results,
        relations: Some(gold.relation_count()),
        error,
    }
}

/// Scores every pair with each metric in `metrics`, in parallel; the result
/// is deterministic given `config`.
pub fn evaluate_corpus<S: Scalar>(
    pairs: &[Pair],
    metrics: &[Metric],
    config: &SmatchConfig,
) -> Result<CorpusReport<S>, HarnessError> {
    if pairs.is_empty() {
        return Err(HarnessError::EmptyCorpus);
    }
    if metrics.is_empty() {
        return Err(HarnessError::NoMetric);
    }
    if metrics.contains(&Metric::Smatch) {
        config.validate()?;
    }
    let mut metrics = metrics.to_vec();
    metrics.sort();
    metrics.dedup();
    let entries: Vec<EntryResult<S>> = pairs
        .par_iter()
        .map(|p| score_entry(p, &metrics, config))
        .collect();
    Ok(CorpusReport::from_entries(metrics, entries))
}

fn split_parts<S: Scalar>(
    report: &CorpusReport<S>,
) -> Result<(S, CorpusReport<S>, CorpusReport<S>), HarnessError> {
    let scored: Vec<&EntryResult<S>> = report.scored_entries().collect();
    if scored.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    let total: u64 = scored.iter().map(|e| e.relations.unwrap() as u64).sum();
    let average = S::from_count(total) / S::from_count(scored.len() as u64);
    let (below, above): (Vec<_>, Vec<_>) = scored
        .into_iter()
        .cloned()
        .partition(|e| S::from_count(e.relations.unwrap() as u64) < average);
    Ok((
        average,
        CorpusReport::from_entries(report.metrics.clone(), below),
        CorpusReport::from_entries(report.metrics.clone(), above),
    ))
}

/// Splits scored entries at the mean gold relation count. Entries exactly at
/// the mean go above.
pub fn split_by_relation_average<S: Scalar>(
    report: &CorpusReport<S>,
) -> Result<(CorpusReport<S>, CorpusReport<S>), HarnessError> {
    split_parts(report).map(|(_, below, above)| (below, above))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

pub fn emit_report<S: Scalar>(report: &CorpusReport<S>, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => text_report(report),
        ReportFormat::Json => {
            let mut s =
                serde_json::to_string_pretty(&JsonReport::from_report(report)).expect("plain data");
            s.push('\n');
            s
        }
    }
}

fn table(rows: &[(String, [String; 3])]) -> String {
    let name_width = rows
        .iter()
        .map(|(n, _)| n.len())
        .max()
        .unwrap_or(0)
        .max("Metric".len());
    let mut out = format!(
        "{:<name_width$}  {:>5}  {:>5}  {:>5}\n",
        "Metric", "P", "R", "F"
    );
    for (name, [p, r, f]) in rows {
        out.push_str(&format!("{name:<name_width$}  {p:>5}  {r:>5}  {f:>5}\n"));
    }
    out
}

fn micro_rows<S: Scalar>(report: &CorpusReport<S>) -> Vec<(String, [String; 3])> {
    report
        .aggregates
        .iter()
        .map(|(m, a)| (m.display_name().to_string(), a.micro.to_fixed(2)))
        .collect()
}

fn text_report<S: Scalar>(report: &CorpusReport<S>) -> String {
    let errors = report.entries.iter().filter(|e| e.error.is_some()).count();
    let mut out = format!(
        "Entries: {} ({} with errors)\n\n",
        report.entries.len(),
        errors
    );
    out.push_str(&table(&micro_rows(report)));
    out.push_str("\nMacro average\n");
    let macro_rows: Vec<_> = report
        .aggregates
        .iter()
        .map(|(m, a)| (m.display_name().to_string(), a.macro_avg.to_fixed(2)))
        .collect();
    out.push_str(&table(&macro_rows));
    if let Some(splits) = &report.splits {
        out.push_str(&format!(
            "\nAverage relations per entry: {}\n",
            splits.average_relations.to_fixed(2)
        ));
        for (name, part) in [
            ("Below average", &splits.below),
            ("Above average", &splits.above),
        ] {
            out.push_str(&format!("\n{name} ({} entries)\n", part.entries.len()));
            out.push_str(&table(&micro_rows(part)));
        }
    }
    out
}

/// Side-by-side per-entry F-scores of SEMA and smatch with their difference
/// (SEMA minus smatch), followed by the micro aggregates of both.
pub fn emit_comparison<S: Scalar>(report: &CorpusReport<S>) -> String {
    let id_width = report
        .entries
        .iter()
        .map(|e| e.id.len())
        .max()
        .unwrap_or(0)
        .max(2);
    let mut out = format!(
        "{:<id_width$}  {:>6}  {:>6}  {:>6}\n",
        "id", "SEMA", "smatch", "delta"
    );
    for entry in &report.entries {
        let sema = entry
            .results
            .get(&Metric::Sema)
            .map(|r| r.f_score().clone());
        let smatch = entry
            .results
            .get(&Metric::Smatch)
            .map(|r| r.f_score().clone());
        let cell = |v: &Option<S>| {
            v.as_ref()
                .map_or_else(|| "-".to_string(), |v| v.to_fixed(2))
        };
        let delta = match (&sema, &smatch) {
            (Some(a), Some(b)) => (a.clone() - b.clone()).to_fixed(2),
            _ => "-".to_string(),
        };
        out.push_str(&format!(
            "{:<id_width$}  {:>6}  {:>6}  {:>6}\n",
            entry.id,
            cell(&sema),
            cell(&smatch),
            delta
        ));
    }
    out.push('\n');
    out.push_str(&table(&micro_rows(report)));
    out
}

/// Counts and scores of one metric, as written to JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonScores {
    #[serde(rename = "M")]
    pub matched: u64,
    #[serde(rename = "C")]
    pub test: u64,
    #[serde(rename = "T")]
    pub reference: u64,
    #[serde(rename = "P")]
    pub precision: String,
    #[serde(rename = "R")]
    pub recall: String,
    #[serde(rename = "F")]
    pub f_score: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonPrf {
    #[serde(rename = "P")]
    pub precision: String,
    #[serde(rename = "R")]
    pub recall: String,
    #[serde(rename = "F")]
    pub f_score: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonEntry {
    pub id: String,
    #[serde(flatten)]
    pub metrics: BTreeMap<String, JsonScores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonAggregate {
    pub entries: usize,
    /// Summed counts with the scores computed from them.
    pub micro: JsonScores,
    #[serde(rename = "macro")]
    pub macro_avg: JsonPrf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonSplits {
    pub average: String,
    pub below: JsonReport,
    pub above: JsonReport,
}

/// JSON report schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonReport {
    pub entries: Vec<JsonEntry>,
    pub aggregates: BTreeMap<String, JsonAggregate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<Box<JsonSplits>>,
}

fn json_prf<S: Scalar>(prf: &Prf<S>) -> JsonPrf {
    JsonPrf {
        precision: prf.precision.to_decimal(),
        recall: prf.recall.to_decimal(),
        f_score: prf.f_score.to_decimal(),
    }
}

fn json_scores<S: Scalar>(matched: u64, test: u64, reference: u64, prf: &Prf<S>) -> JsonScores {
    let JsonPrf {
        precision,
        recall,
        f_score,
    } = json_prf(prf);
    JsonScores {
        matched,
        test,
        reference,
        precision,
        recall,
        f_score,
    }
}

impl JsonReport {
    pub fn from_report<S: Scalar>(report: &CorpusReport<S>) -> Self {
        let entries = report
            .entries
            .iter()
            .map(|e| JsonEntry {
                id: e.id.clone(),
                metrics: e
                    .results
                    .iter()
                    .map(|(m, r)| {
                        (
                            m.key().to_string(),
                            json_scores(
                                r.matched_count,
                                r.test_count,
                                r.reference_count,
                                &r.scores,
                            ),
                        )
                    })
                    .collect(),
                relations: e.relations,
                error: e.error.clone(),
            })
            .collect();
        let aggregates = report
            .aggregates
            .iter()
            .map(|(m, a)| {
                (
                    m.key().to_string(),
                    JsonAggregate {
                        entries: a.entries,
                        micro: json_scores(a.matched, a.test, a.reference, &a.micro),
                        macro_avg: json_prf(&a.macro_avg),
                    },
                )
            })
            .collect();
        let splits = report.splits.as_ref().map(|s| {
            Box::new(JsonSplits {
                average: s.average_relations.to_decimal(),
                below: JsonReport::from_report(&s.below),
                above: JsonReport::from_report(&s.above),
            })
        });
        Self {
            entries,
            aggregates,
            splits,
        }
    }
}
