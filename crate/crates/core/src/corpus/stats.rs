use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CorrectionInstance, ErrorType, Reference};
use crate::stg::encode_instance;

/// How Delete operations are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DeleteUnit {
    /// One per run of consecutive deleted positions.
    #[default]
    Run,
    /// One per deleted position.
    Position,
    /// One per reference containing a Delete.
    Operation,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StatsOptions {
    /// Count identical references of one instance only once.
    pub dedupe: bool,
    pub delete_unit: DeleteUnit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub switch: usize,
    pub delete: usize,
    pub insert: usize,
    pub modify: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LengthStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
}

/// Record form, with the field names used by `stats --format records`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusStats {
    #[serde(rename = "sentences")]
    pub sentence_count: usize,
    #[serde(rename = "erroneous")]
    pub erroneous_count: usize,
    #[serde(flatten)]
    pub op_counts: OpCounts,
    #[serde(rename = "type_pct")]
    pub error_type_proportions: IndexMap<String, f64>,
    #[serde(rename = "len")]
    pub length: LengthStats,
    /// `ref_hist[k]` = erroneous sentences with exactly `k` non-empty references.
    #[serde(rename = "ref_hist")]
    pub reference_count_histogram: Vec<usize>,
    #[serde(rename = "mean_refs")]
    pub mean_refs_per_sentence: f64,
}

fn count_runs(positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .filter(|&(k, &p)| k == 0 || positions[k - 1] + 1 != p)
        .count()
}

fn distinct_references(inst: &CorrectionInstance, dedupe: bool) -> Vec<&Reference> {
    let mut refs: Vec<&Reference> = inst.non_empty_references().collect();
    if dedupe {
        let mut seen = Vec::new();
        refs.retain(|r| {
            if seen.contains(r) {
                false
            } else {
                seen.push(*r);
                true
            }
        });
    }
    refs
}

pub fn compute_stats(instances: &[CorrectionInstance], opts: StatsOptions) -> Result<CorpusStats> {
    if instances.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut ops = OpCounts::default();
    let mut type_counts: BTreeMap<ErrorType, usize> = BTreeMap::new();
    let mut hist: Vec<usize> = Vec::new();
    let mut erroneous = 0usize;
    let mut ref_total = 0usize;
    let (mut min, mut max, mut len_sum) = (usize::MAX, 0usize, 0usize);

    for inst in instances {
        let n = inst.sentence.len();
        min = min.min(n);
        max = max.max(n);
        len_sum += n;

        let refs = distinct_references(inst, opts.dedupe);
        for r in &refs {
            ops.switch += usize::from(r.has_effective_switch());
            ops.delete += match opts.delete_unit {
                DeleteUnit::Run => count_runs(&r.deletes),
                DeleteUnit::Position => r.deletes.len(),
                DeleteUnit::Operation => usize::from(!r.deletes.is_empty()),
            };
            ops.insert += r.inserts.len();
            ops.modify += r.modifies.len();
        }

        if inst.error_flag {
            erroneous += 1;
            for t in &inst.error_types {
                *type_counts.entry(*t).or_default() += 1;
            }
            if hist.len() <= refs.len() {
                hist.resize(refs.len() + 1, 0);
            }
            hist[refs.len()] += 1;
            ref_total += refs.len();
        }
    }

    let labels: usize = type_counts.values().sum();
    let error_type_proportions = ErrorType::ALL
        .iter()
        .map(|t| {
            let c = type_counts.get(t).copied().unwrap_or(0);
            let pct = if labels == 0 { 0.0 } else { 100.0 * c as f64 / labels as f64 };
            (t.to_string(), pct)
        })
        .collect();

    Ok(CorpusStats {
        sentence_count: instances.len(),
        erroneous_count: erroneous,
        op_counts: ops,
        error_type_proportions,
        length: LengthStats {
            min,
            max,
            mean: len_sum as f64 / instances.len() as f64,
        },
        reference_count_histogram: hist,
        mean_refs_per_sentence: if erroneous == 0 {
            0.0
        } else {
            ref_total as f64 / erroneous as f64
        },
    })
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = if self.sentence_count == 0 {
            0.0
        } else {
            100.0 * self.erroneous_count as f64 / self.sentence_count as f64
        };
        writeln!(f, "{:<14}{:>10}", "sentences", self.sentence_count)?;
        writeln!(f, "{:<14}{:>10}  ({pct:.2}%)", "erroneous", self.erroneous_count)?;
        writeln!(f, "{:<14}{:>10}", "switch", self.op_counts.switch)?;
        writeln!(f, "{:<14}{:>10}", "delete", self.op_counts.delete)?;
        writeln!(f, "{:<14}{:>10}", "insert", self.op_counts.insert)?;
        writeln!(f, "{:<14}{:>10}", "modify", self.op_counts.modify)?;
        writeln!(
            f,
            "{:<14}{:>10}  (min {}, max {})",
            "length mean",
            format!("{:.2}", self.length.mean),
            self.length.min,
            self.length.max
        )?;
        writeln!(f, "{:<14}{:>10.2}", "refs/sentence", self.mean_refs_per_sentence)?;
        for (t, p) in &self.error_type_proportions {
            writeln!(f, "{:<14}{:>9.2}%", format!("type {t}"), p)?;
        }
        for (k, c) in self.reference_count_histogram.iter().enumerate() {
            writeln!(f, "{:<14}{:>10}", format!("{k} refs"), c)?;
        }
        Ok(())
    }
}

/// Share of insert and modify items whose generated-character count fits `t_max`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TagCoverage {
    pub items: usize,
    pub encodable_items: usize,
    pub references: usize,
    pub encodable_references: usize,
}

impl TagCoverage {
    pub fn item_fraction(&self) -> f64 {
        if self.items == 0 {
            1.0
        } else {
            self.encodable_items as f64 / self.items as f64
        }
    }

    pub fn reference_fraction(&self) -> f64 {
        if self.references == 0 {
            1.0
        } else {
            self.encodable_references as f64 / self.references as f64
        }
    }
}

/// Item-level coverage counts an insert of `t` characters, or a modify whose
/// label outgrows its span by `t`, as encodable when `t ≤ t_max`.
/// Reference-level coverage runs the full encoder.
pub fn tag_coverage(instances: &[CorrectionInstance], t_max: usize) -> TagCoverage {
    let mut c = TagCoverage::default();
    for inst in instances {
        for r in inst.non_empty_references() {
            for i in &r.inserts {
                c.items += 1;
                c.encodable_items += usize::from(i.count <= t_max);
            }
            for m in &r.modifies {
                c.items += 1;
                c.encodable_items += usize::from(m.label.len().saturating_sub(m.span) <= t_max);
            }
            c.references += 1;
            c.encodable_references += usize::from(encode_instance(&inst.sentence, r, t_max).is_ok());
        }
    }
    c
}
