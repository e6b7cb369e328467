//! Precision, recall and f-score from triple counts.

use thiserror::Error;

use crate::graph::Triple;
use crate::scalar::{Exact, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("matched count {matched} exceeds min(test {test}, reference {reference})")]
pub struct CountError {
    pub matched: u64,
    pub test: u64,
    pub reference: u64,
}

/// Precision, recall and f-score.
#[derive(Debug, Clone, PartialEq)]
pub struct Prf<S = Exact> {
    pub precision: S,
    pub recall: S,
    pub f_score: S,
}

impl<S: Scalar> Prf<S> {
    pub fn zero() -> Self {
        Self {
            precision: S::zero(),
            recall: S::zero(),
            f_score: S::zero(),
        }
    }

    /// Harmonic mean of `precision` and `recall`, zero when both are zero.
    pub fn from_precision_recall(precision: S, recall: S) -> Self {
        let sum = precision.clone() + recall.clone();
        let f_score = if sum.is_zero() {
            S::zero()
        } else {
            S::from_count(2) * precision.clone() * recall.clone() / sum
        };
        Self {
            precision,
            recall,
            f_score,
        }
    }

    /// `P R F` rounded to `places` decimals.
    pub fn to_fixed(&self, places: usize) -> [String; 3] {
        [
            self.precision.to_fixed(places),
            self.recall.to_fixed(places),
            self.f_score.to_fixed(places),
        ]
    }
}

/// P = M/C and R = M/T, with P = 0 when C = 0 and R = 0 when T = 0.
pub fn f_score<S: Scalar>(matched: u64, test: u64, reference: u64) -> Result<Prf<S>, CountError> {
    if matched > test.min(reference) {
        return Err(CountError {
            matched,
            test,
            reference,
        });
    }
    let ratio = |den: u64| {
        if den == 0 {
            S::zero()
        } else {
            S::from_count(matched) / S::from_count(den)
        }
    };
    Ok(Prf::from_precision_recall(ratio(test), ratio(reference)))
}

/// Outcome of scoring one test graph against one reference graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult<S = Exact> {
    /// Matched test-side triples.
    pub matched: Vec<Triple>,
    /// M: number of matched triples.
    pub matched_count: u64,
    /// C: number of test triples.
    pub test_count: u64,
    /// T: number of reference triples.
    pub reference_count: u64,
    pub scores: Prf<S>,
}

impl<S: Scalar> MatchResult<S> {
    pub fn from_matched(
        matched: Vec<Triple>,
        test_count: u64,
        reference_count: u64,
    ) -> Result<Self, CountError> {
        let m = matched.len() as u64;
        let scores = f_score(m, test_count, reference_count)?;
        Ok(Self {
            matched,
            matched_count: m,
            test_count,
            reference_count,
            scores,
        })
    }

    /// Result with no matched triples, used for unparseable test entries.
    pub fn unmatched(test_count: u64, reference_count: u64) -> Self {
        Self::from_matched(Vec::new(), test_count, reference_count).expect("zero matches")
    }

    pub fn precision(&self) -> &S {
        &self.scores.precision
    }

    pub fn recall(&self) -> &S {
        &self.scores.recall
    }

    pub fn f_score(&self) -> &S {
        &self.scores.f_score
    }

    /// `P=0.40 R=0.40 F=0.40`
    pub fn summary(&self) -> String {
        let [p, r, f] = self.scores.to_fixed(2);
        format!("P={p} R={r} F={f}")
    }
}
