use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{validate_reference, Reference, Sentence};

/// Default upper bound on the insertion count carried by a tag.
pub const DEFAULT_T_MAX: usize = 6;

/// Per-character tag of the tagger.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tag {
    /// Keep the character.
    Keep,
    /// Drop the character.
    Delete,
    /// Keep the character and generate `t` characters after it.
    Insert(usize),
    /// Replace the character by one generated character.
    Modify,
    /// Replace the character and generate `t` more after it.
    ModifyInsert(usize),
}

impl Tag {
    /// Mask slots this tag opens in the generator template.
    pub fn slots(self) -> usize {
        match self {
            Tag::Keep | Tag::Delete => 0,
            Tag::Insert(t) => t,
            Tag::Modify => 1,
            Tag::ModifyInsert(t) => 1 + t,
        }
    }

    pub fn keeps_source(self) -> bool {
        matches!(self, Tag::Keep | Tag::Insert(_))
    }

    fn from_parts(kept: bool, generated: usize) -> Tag {
        match (kept, generated) {
            (true, 0) => Tag::Keep,
            (true, g) => Tag::Insert(g),
            (false, 0) => Tag::Delete,
            (false, 1) => Tag::Modify,
            (false, g) => Tag::ModifyInsert(g - 1),
        }
    }

    fn count(self) -> usize {
        match self {
            Tag::Insert(t) | Tag::ModifyInsert(t) => t,
            _ => 0,
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Keep => f.write_str("K"),
            Tag::Delete => f.write_str("D"),
            Tag::Insert(t) => write!(f, "I_{t}"),
            Tag::Modify => f.write_str("M"),
            Tag::ModifyInsert(t) => write!(f, "MI_{t}"),
        }
    }
}

impl FromStr for Tag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let count = |rest: &str| -> std::result::Result<usize, String> {
            match rest.parse::<usize>() {
                Ok(t) if t > 0 => Ok(t),
                _ => Err(format!("bad tag count in `{s}`")),
            }
        };
        match s {
            "K" => Ok(Tag::Keep),
            "D" => Ok(Tag::Delete),
            "M" => Ok(Tag::Modify),
            _ => {
                if let Some(rest) = s.strip_prefix("MI_") {
                    Ok(Tag::ModifyInsert(count(rest)?))
                } else if let Some(rest) = s.strip_prefix("I_") {
                    Ok(Tag::Insert(count(rest)?))
                } else {
                    Err(format!("unknown tag `{s}`"))
                }
            }
        }
    }
}

impl Serialize for Tag {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Tags over the switched sentence plus the characters the masks receive,
/// in left-to-right order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TagSequence {
    pub tags: Vec<Tag>,
    pub fills: Vec<char>,
}

impl TagSequence {
    pub fn slot_count(&self) -> usize {
        self.tags.iter().map(|t| t.slots()).sum()
    }
}

/// Tags for switch-free `edits` whose positions index `switched`.
///
/// A modify of `k` characters into `m` spreads its label one character per
/// source character; the surplus lands on the last one (MI tag) and a
/// shortfall leaves trailing D tags.
pub fn encode_tags(switched: &Sentence, edits: &Reference, t_max: usize) -> Result<TagSequence> {
    if edits.has_effective_switch() {
        return Err(Error::PreconditionViolated(
            "tag edits must be expressed on the already switched sentence".into(),
        ));
    }
    let violations = validate_reference(switched, edits);
    if !violations.is_empty() {
        return Err(Error::InvalidReference(violations));
    }

    let n = switched.len();
    let mut kept = vec![true; n];
    let mut generated: Vec<Vec<char>> = vec![Vec::new(); n];
    for &p in &edits.deletes {
        kept[p] = false;
    }
    for m in &edits.modifies {
        let k = m.span;
        for (offset, slot) in kept[m.pos..m.pos + k].iter_mut().enumerate() {
            *slot = false;
            let take = if offset + 1 < k {
                m.label.get(offset).map(std::slice::from_ref).unwrap_or(&[])
            } else {
                m.label.get(offset..).unwrap_or(&[])
            };
            generated[m.pos + offset].extend_from_slice(take);
        }
    }
    for ins in &edits.inserts {
        generated[ins.pos].extend_from_slice(&ins.label);
    }

    let mut seq = TagSequence::default();
    for (i, (keep, gen)) in kept.into_iter().zip(generated).enumerate() {
        let tag = Tag::from_parts(keep, gen.len());
        if tag.count() > t_max {
            return Err(Error::InsertionTooLong {
                position: i,
                required: tag.count(),
                limit: t_max,
            });
        }
        seq.tags.push(tag);
        seq.fills.extend(gen);
    }
    Ok(seq)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TemplateElem {
    Literal(char),
    Mask,
}

/// Generator input: literals and mask slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskTemplate(pub Vec<TemplateElem>);

impl MaskTemplate {
    pub fn slot_count(&self) -> usize {
        self.0.iter().filter(|e| matches!(e, TemplateElem::Mask)).count()
    }
}

impl fmt::Display for MaskTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.0 {
            match e {
                TemplateElem::Literal(c) => write!(f, "{c}")?,
                TemplateElem::Mask => f.write_str("[MASK]")?,
            }
        }
        Ok(())
    }
}

pub fn build_mask_template(switched: &Sentence, tags: &[Tag]) -> Result<MaskTemplate> {
    if tags.len() != switched.len() {
        return Err(Error::LengthMismatch {
            expected: switched.len(),
            found: tags.len(),
        });
    }
    let mut out = Vec::with_capacity(switched.len());
    for (&c, &tag) in switched.chars().iter().zip(tags) {
        if tag.keeps_source() {
            out.push(TemplateElem::Literal(c));
        }
        out.extend(std::iter::repeat(TemplateElem::Mask).take(tag.slots()));
    }
    Ok(MaskTemplate(out))
}

pub fn fill_template(template: &MaskTemplate, fills: &[char]) -> Result<Sentence> {
    let slots = template.slot_count();
    if slots != fills.len() {
        return Err(Error::FillCountMismatch {
            slots,
            fills: fills.len(),
        });
    }
    let mut fills = fills.iter();
    let out = template
        .0
        .iter()
        .map(|e| match e {
            TemplateElem::Literal(c) => *c,
            TemplateElem::Mask => *fills.next().expect("slot count checked"),
        })
        .collect();
    Ok(Sentence::from_chars(out))
}
