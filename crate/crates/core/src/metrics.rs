//! Exact match and character-level span P/R/F0.5 against multiple references.
//!
//! Edits are read off the same alignment path used for label derivation;
//! consecutive character edits of the same kind merge into one span. A
//! hypothesis is scored against every reference and the best F0.5 (then
//! precision) wins.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::align::{EditPathMatrix, Step};
use crate::error::{Error, Result};
use crate::model::{apply_reference, ErrorType, Reference, Sentence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanKind {
    Insert,
    Delete,
    Substitute,
}

/// Source range `[start, end)` replaced by `replacement`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EditSpan {
    pub kind: SpanKind,
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<char>,
}

impl fmt::Display for EditSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            SpanKind::Insert => "insert",
            SpanKind::Delete => "delete",
            SpanKind::Substitute => "substitute",
        };
        write!(f, "{kind} [{}, {})", self.start, self.end)?;
        if !self.replacement.is_empty() {
            write!(f, " → \"{}\"", self.replacement.iter().collect::<String>())?;
        }
        Ok(())
    }
}

pub fn extract_edits(src: &Sentence, tgt: &Sentence) -> Vec<EditSpan> {
    let tc = tgt.chars();
    let path = EditPathMatrix::new(src.chars(), tc).backtrack();
    let mut spans: Vec<EditSpan> = Vec::new();
    for (i, j, step) in path {
        let kind = match step {
            Step::Copy => continue,
            Step::Modify => SpanKind::Substitute,
            Step::Delete => SpanKind::Delete,
            Step::Insert => SpanKind::Insert,
        };
        if let Some(last) = spans.last_mut() {
            if last.kind == kind && last.end == i && (kind != SpanKind::Insert || last.start == i) {
                if step != Step::Insert {
                    last.end += 1;
                }
                if step != Step::Delete {
                    last.replacement.push(tc[j]);
                }
                continue;
            }
        }
        spans.push(EditSpan {
            kind,
            start: i,
            end: if step == Step::Insert { i } else { i + 1 },
            replacement: if step == Step::Delete { Vec::new() } else { vec![tc[j]] },
        });
    }
    spans
}

/// Counts for one hypothesis/reference comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MatchCounts {
    pub tp: usize,
    pub hyp_count: usize,
    pub ref_count: usize,
}

impl MatchCounts {
    pub fn precision(&self) -> f64 {
        if self.hyp_count == 0 {
            1.0
        } else {
            self.tp as f64 / self.hyp_count as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.ref_count == 0 {
            1.0
        } else {
            self.tp as f64 / self.ref_count as f64
        }
    }

    pub fn f_half(&self) -> f64 {
        f_beta(self.precision(), self.recall(), 0.5)
    }
}

impl std::ops::AddAssign for MatchCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.hyp_count += o.hyp_count;
        self.ref_count += o.ref_count;
    }
}

pub fn f_beta(p: f64, r: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    if p + r == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * r / (b2 * p + r)
    }
}

pub fn match_edits(hyp: &[EditSpan], reference: &[EditSpan]) -> MatchCounts {
    let mut pool: Vec<&EditSpan> = reference.iter().collect();
    let mut tp = 0;
    for h in hyp {
        if let Some(k) = pool.iter().position(|r| *r == h) {
            pool.swap_remove(k);
            tp += 1;
        }
    }
    MatchCounts {
        tp,
        hyp_count: hyp.len(),
        ref_count: reference.len(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalScores {
    pub precision: f64,
    pub recall: f64,
    pub f_half: f64,
    pub exact_match: bool,
    #[serde(flatten)]
    pub counts: MatchCounts,
    /// Index of the reference the P/R/F0.5 figures come from.
    pub best_reference: usize,
}

/// Scores one hypothesis against every reference of its source.
pub fn evaluate_instance(src: &Sentence, hyp: &Sentence, refs: &[Reference]) -> Result<EvalScores> {
    if refs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let realized = refs
        .iter()
        .map(|r| apply_reference(src, r))
        .collect::<Result<Vec<_>>>()?;
    let exact_match = realized.iter().any(|t| t == hyp);
    let hyp_edits = extract_edits(src, hyp);

    let mut best: Option<(usize, MatchCounts)> = None;
    for (k, target) in realized.iter().enumerate() {
        let counts = match_edits(&hyp_edits, &extract_edits(src, target));
        let wins = match best {
            None => true,
            Some((_, b)) => {
                let (f, bf) = (counts.f_half(), b.f_half());
                f > bf || (f == bf && counts.precision() > b.precision())
            }
        };
        if wins {
            best = Some((k, counts));
        }
    }
    let (best_reference, counts) = best.expect("refs is non-empty");
    Ok(EvalScores {
        precision: counts.precision(),
        recall: counts.recall(),
        f_half: counts.f_half(),
        exact_match,
        counts,
        best_reference,
    })
}

/// One row of a corpus evaluation.
#[derive(Clone, Debug)]
pub struct EvalRow {
    pub source: Sentence,
    pub hypothesis: Sentence,
    pub references: Vec<Reference>,
    pub error_types: Vec<ErrorType>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Aggregate {
    pub rows: usize,
    pub exact: usize,
    #[serde(flatten)]
    pub counts: MatchCounts,
}

impl Aggregate {
    fn add(&mut self, s: &EvalScores) {
        self.rows += 1;
        self.exact += usize::from(s.exact_match);
        self.counts += s.counts;
    }

    /// Exact match as a percentage.
    pub fn exact_match(&self) -> f64 {
        if self.rows == 0 {
            0.0
        } else {
            100.0 * self.exact as f64 / self.rows as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusReport {
    pub overall: Aggregate,
    pub exact_match: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_half: f64,
    /// Macro average of per-row F0.5, for comparison with the micro figure.
    pub macro_f_half: f64,
    pub by_type: BTreeMap<String, Aggregate>,
    pub per_row: Vec<EvalScores>,
}

/// Micro-averaged corpus scores; each row contributes the counts of its best
/// reference.
pub fn evaluate_corpus(rows: &[EvalRow]) -> Result<CorpusReport> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut overall = Aggregate::default();
    let mut by_type: BTreeMap<String, Aggregate> = BTreeMap::new();
    let mut per_row = Vec::with_capacity(rows.len());
    for row in rows {
        let s = evaluate_instance(&row.source, &row.hypothesis, &row.references)?;
        overall.add(&s);
        for t in &row.error_types {
            by_type.entry(t.to_string()).or_default().add(&s);
        }
        per_row.push(s);
    }
    let macro_f_half = per_row.iter().map(|s| s.f_half).sum::<f64>() / per_row.len() as f64;
    Ok(CorpusReport {
        exact_match: overall.exact_match(),
        precision: overall.counts.precision(),
        recall: overall.counts.recall(),
        f_half: overall.counts.f_half(),
        overall,
        macro_f_half,
        by_type,
        per_row,
    })
}
