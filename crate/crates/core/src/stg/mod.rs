//! Switch/Tagger/Generator label codecs and the neural-agnostic decode path.
//!
//! A reference is split into three machine-facing layers: next-character
//! pointers for the switch, one tag per character of the switched sentence,
//! and the characters that fill the generator's mask slots.

mod beam;
mod pointers;
mod tags;

pub use beam::{
    attention_scores, beam_decode_permutation, exhaustive_beam_width, path_score, ScoreMatrix,
    DEFAULT_BEAM_WIDTH, LOG_FLOOR,
};
pub use pointers::{pointers_to_permutation, switch_to_pointers, PointerLabels};
pub use tags::{
    build_mask_template, encode_tags, fill_template, MaskTemplate, Tag, TagSequence, TemplateElem,
    DEFAULT_T_MAX,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{attach, validate_reference, Fate, Insert, Modify, Reference, Sentence};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StgLabels {
    pub pointers: PointerLabels,
    pub tags: TagSequence,
}

/// Line-delimited JSON form of [`StgLabels`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StgRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub first: usize,
    pub next: Vec<usize>,
    pub tags: Vec<Tag>,
    pub fills: String,
}

impl StgRecord {
    pub fn from_labels(id: Option<String>, labels: &StgLabels) -> Self {
        StgRecord {
            id,
            first: labels.pointers.first,
            next: labels.pointers.next.clone(),
            tags: labels.tags.tags.clone(),
            fills: labels.tags.fills.iter().collect(),
        }
    }

    pub fn to_labels(&self) -> StgLabels {
        StgLabels {
            pointers: PointerLabels {
                first: self.first,
                next: self.next.clone(),
            },
            tags: TagSequence {
                tags: self.tags.clone(),
                fills: self.fills.chars().collect(),
            },
        }
    }
}

fn reorder(s: &Sentence, order: &[usize]) -> Sentence {
    Sentence::from_chars(order.iter().map(|&i| s.chars()[i]).collect())
}

/// Re-expresses the non-switch edits of `r` on the switched sentence.
///
/// Modify spans that the switch splits keep their label on the first
/// character and delete the rest.
fn edits_on_switched(n: usize, r: &Reference, order: &[usize]) -> Reference {
    let att = attach(n, r);
    let mut out = Reference::empty();
    let mut k = 0;
    while k < n {
        let orig = order[k];
        match att.fates[orig] {
            Fate::Keep => {}
            Fate::Drop => out.deletes.push(k),
            Fate::Replace(label) => {
                let span = r.modifies.iter().find(|m| m.pos == orig).map_or(1, |m| m.span);
                let contiguous = (1..span).all(|d| order.get(k + d) == Some(&(orig + d)));
                let width = if contiguous { span } else { 1 };
                out.modifies.push(Modify {
                    pos: k,
                    span: width,
                    label: label.to_vec(),
                });
                // Validation keeps insertions out of the span's interior, so
                // only the last character can carry one.
                k += width - 1;
                let last = order[k];
                if !att.after[last].is_empty() {
                    out.inserts.push(Insert {
                        pos: k,
                        count: att.after[last].len(),
                        label: att.after[last].clone(),
                    });
                }
                k += 1;
                continue;
            }
        }
        if !att.after[orig].is_empty() {
            out.inserts.push(Insert {
                pos: k,
                count: att.after[orig].len(),
                label: att.after[orig].clone(),
            });
        }
        k += 1;
    }
    out
}

/// Encodes a reference into pointer labels and tags with insertion limit `t_max`.
pub fn encode_instance(s: &Sentence, r: &Reference, t_max: usize) -> Result<StgLabels> {
    let violations = validate_reference(s, r);
    if !violations.is_empty() {
        return Err(Error::InvalidReference(violations));
    }
    let n = s.len();
    let pointers = switch_to_pointers(n, r.switch.as_deref())?;
    let order = pointers_to_permutation(&pointers)?;
    let switched = reorder(s, &order);
    let edits = edits_on_switched(n, r, &order);
    let tags = encode_tags(&switched, &edits, t_max)?;
    Ok(StgLabels { pointers, tags })
}

/// Runs the three decode stages: reorder, build the mask template, fill it.
pub fn decode_instance(s: &Sentence, labels: &StgLabels) -> Result<Sentence> {
    if labels.pointers.len() != s.len() {
        return Err(Error::LengthMismatch {
            expected: s.len(),
            found: labels.pointers.len(),
        });
    }
    let order = pointers_to_permutation(&labels.pointers)?;
    let switched = reorder(s, &order);
    let template = build_mask_template(&switched, &labels.tags.tags)?;
    fill_template(&template, &labels.tags.fills)
}
