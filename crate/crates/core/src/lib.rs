//! Evaluation of Abstract Meaning Representation graphs.
//!
//! Graphs are read from PENMAN notation ([`penman`]) into [`AmrGraph`]s and
//! scored against a reference with two metrics:
//!
//! * [`sema_score`]: breadth-first matching in which a triple only counts if
//!   its parent context matches, without a TOP triple and with equal weights.
//! * [`smatch_score`]: the maximum triple overlap over one-to-one variable
//!   mappings, with the TOP triple on the root.
//!
//! Scores are generic over [`Scalar`]; [`Exact`] rationals are the default,
//! with `f64` available when exactness is not needed.
//!
//! ```
//! use sema::{parse_penman, sema_score, Exact};
//!
//! let reference = parse_penman("(a / adjust-01 :ARG0 (g / girl) :ARG1 (m / machine))").unwrap();
//! let test = parse_penman("(a / adjust-01 :ARG0 (g / boy) :ARG1 (m / machine))").unwrap();
//! let result = sema_score::<Exact>(&test, &reference).unwrap();
//! assert_eq!(result.matched_count, 3);
//! assert_eq!(result.summary(), "P=0.60 R=0.60 F=0.60");
//! ```

pub mod graph;
pub mod harness;
pub mod penman;
pub mod scalar;
pub mod score;
pub mod sema;
pub mod smatch;

pub use graph::{
    AmrGraph, Constant, ConstantKind, Edge, GraphError, NodeRef, Triple, TripleForm, TripleTarget,
    Violation,
};
pub use harness::{
    emit_comparison, emit_report, evaluate_corpus, pair_corpora, split_by_relation_average,
    CorpusReport, HarnessError, Metric, Pair, Pairing, ReportFormat,
};
pub use penman::{
    parse_penman, read_corpus, read_corpus_str, serialize_penman, AnnotatedAmr, CorpusItem,
    EntryError, ParseError, PenmanSource,
};
pub use scalar::{Exact, Scalar};
pub use score::{f_score, MatchResult, Prf};
pub use sema::{sema_score, SemaConfig};
pub use smatch::{
    exact_best_mapping, hill_climb_mapping, smatch_score, SmatchConfig, SmatchError,
    VariableMapping,
};

/// Match result with exact rational scores.
pub type ExactMatch = MatchResult<Exact>;
/// Match result with `f64` scores.
pub type MatchResult64 = MatchResult<f64>;
/// Corpus report with exact rational scores.
pub type ExactReport = CorpusReport<Exact>;
/// Corpus report with `f64` scores.
pub type CorpusReport64 = CorpusReport<f64>;
/// Exact 64-bit rational, for callers that want a `Copy` exact type.
pub type Rational64 = num_rational::Rational64;
