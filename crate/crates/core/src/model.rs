//! Sentences, correction operations and references.
//!
//! A [`Reference`] bundles the four correction operations (switch, delete,
//! insert, modify). Delete/insert/modify positions always index the
//! *original* sentence. Applying a reference happens in three phases:
//!
//! 1. each delete/insert/modify item is attached to its original index,
//! 2. characters are reordered by the switch order (identity if absent),
//! 3. attached edits are realized in output order: deleted characters are
//!    dropped, a modify span is replaced by its label at the position of the
//!    span's first character, and insert labels follow their anchor.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A sentence as a sequence of Unicode code points.
///
/// Indexing is by code point. Corpus sentences are non-empty, but the type
/// admits the empty sentence so that fully-deleting references can be
/// represented as values.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sentence(Vec<char>);

impl Sentence {
    pub fn new(text: &str) -> Self {
        Sentence(text.chars().collect())
    }

    pub fn from_chars(chars: Vec<char>) -> Self {
        Sentence(chars)
    }

    pub fn chars(&self) -> &[char] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_chars(self) -> Vec<char> {
        self.0
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl From<&str> for Sentence {
    fn from(s: &str) -> Self {
        Sentence::new(s)
    }
}

impl From<String> for Sentence {
    fn from(s: String) -> Self {
        Sentence::new(&s)
    }
}

/// Insert `label` (of `count` characters) right after the character at `pos`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Insert {
    pub pos: usize,
    pub count: usize,
    pub label: Vec<char>,
}

impl Insert {
    pub fn new(pos: usize, label: &str) -> Self {
        let label: Vec<char> = label.chars().collect();
        Insert {
            pos,
            count: label.len(),
            label,
        }
    }
}

/// Replace the `span` characters starting at `pos` with `label`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Modify {
    pub pos: usize,
    pub span: usize,
    pub label: Vec<char>,
}

impl Modify {
    pub fn new(pos: usize, span: usize, label: &str) -> Self {
        Modify {
            pos,
            span,
            label: label.chars().collect(),
        }
    }
}

/// One of the four correction operations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EditOperation {
    Switch(Vec<usize>),
    Delete(Vec<usize>),
    Insert(Vec<Insert>),
    Modify(Vec<Modify>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Switch,
    Delete,
    Insert,
    Modify,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpKind::Switch => "Switch",
            OpKind::Delete => "Delete",
            OpKind::Insert => "Insert",
            OpKind::Modify => "Modify",
        })
    }
}

/// One complete correction of a sentence.
///
/// The empty reference means the sentence is already correct.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Reference {
    pub switch: Option<Vec<usize>>,
    pub deletes: Vec<usize>,
    pub inserts: Vec<Insert>,
    pub modifies: Vec<Modify>,
}

impl Reference {
    pub fn empty() -> Self {
        Reference::default()
    }

    pub fn switch(order: Vec<usize>) -> Self {
        Reference {
            switch: Some(order),
            ..Default::default()
        }
    }

    pub fn delete(positions: Vec<usize>) -> Self {
        Reference {
            deletes: positions,
            ..Default::default()
        }
    }

    pub fn insert(items: Vec<Insert>) -> Self {
        Reference {
            inserts: items,
            ..Default::default()
        }
    }

    pub fn modify(items: Vec<Modify>) -> Self {
        Reference {
            modifies: items,
            ..Default::default()
        }
    }

    pub fn with_deletes(mut self, positions: Vec<usize>) -> Self {
        self.deletes = positions;
        self
    }

    pub fn with_inserts(mut self, items: Vec<Insert>) -> Self {
        self.inserts = items;
        self
    }

    pub fn with_modifies(mut self, items: Vec<Modify>) -> Self {
        self.modifies = items;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.switch.is_none()
            && self.deletes.is_empty()
            && self.inserts.is_empty()
            && self.modifies.is_empty()
    }

    /// True when the switch order is present and not the identity.
    pub fn has_effective_switch(&self) -> bool {
        self.switch
            .as_ref()
            .is_some_and(|o| o.iter().enumerate().any(|(i, &v)| i != v))
    }

    /// Operations in canonical order (Switch, Delete, Insert, Modify); empty
    /// groups are skipped.
    pub fn operations(&self) -> Vec<EditOperation> {
        let mut ops = Vec::new();
        if let Some(order) = &self.switch {
            ops.push(EditOperation::Switch(order.clone()));
        }
        if !self.deletes.is_empty() {
            ops.push(EditOperation::Delete(self.deletes.clone()));
        }
        if !self.inserts.is_empty() {
            ops.push(EditOperation::Insert(self.inserts.clone()));
        }
        if !self.modifies.is_empty() {
            ops.push(EditOperation::Modify(self.modifies.clone()));
        }
        ops
    }

    pub fn from_operations(ops: impl IntoIterator<Item = EditOperation>) -> Self {
        let mut r = Reference::default();
        for op in ops {
            match op {
                EditOperation::Switch(o) => r.switch = Some(o),
                EditOperation::Delete(mut d) => r.deletes.append(&mut d),
                EditOperation::Insert(mut i) => r.inserts.append(&mut i),
                EditOperation::Modify(mut m) => r.modifies.append(&mut m),
            }
        }
        r
    }
}

/// Minimality measure: one for a non-identity switch, plus one per deleted
/// position, insert item and modify item.
pub fn op_count(r: &Reference) -> usize {
    usize::from(r.has_effective_switch()) + r.deletes.len() + r.inserts.len() + r.modifies.len()
}

/// The seven grammatical error categories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorType {
    /// Incorrect word collocation.
    Iwc,
    /// Component missing.
    Cm,
    /// Component redundancy.
    Cr,
    /// Structure confusion.
    Sc,
    /// Incorrect word order.
    Iwo,
    /// Illogical.
    Ill,
    /// Ambiguity.
    Am,
}

impl ErrorType {
    pub const ALL: [ErrorType; 7] = [
        ErrorType::Iwc,
        ErrorType::Cm,
        ErrorType::Cr,
        ErrorType::Sc,
        ErrorType::Iwo,
        ErrorType::Ill,
        ErrorType::Am,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorType::Iwc => "IWC",
            ErrorType::Cm => "CM",
            ErrorType::Cr => "CR",
            ErrorType::Sc => "SC",
            ErrorType::Iwo => "IWO",
            ErrorType::Ill => "ILL",
            ErrorType::Am => "AM",
        }
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ErrorType::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown error type `{s}`"))
    }
}

impl serde::Serialize for ErrorType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> serde::Deserialize<'de> for ErrorType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One corpus record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrectionInstance {
    pub id: String,
    pub sentence: Sentence,
    pub error_flag: bool,
    pub error_types: BTreeSet<ErrorType>,
    pub references: Vec<Reference>,
    /// Raw JSON text of the `external` field, kept verbatim.
    pub external: Option<String>,
}

impl CorrectionInstance {
    pub fn non_empty_references(&self) -> impl Iterator<Item = &Reference> {
        self.references.iter().filter(|r| !r.is_empty())
    }

    /// Checks `error_flag ⇔ some non-empty reference` and
    /// `error_types non-empty ⇔ error_flag`.
    pub fn flag_consistency(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let has_edit = self.non_empty_references().next().is_some();
        if self.error_flag && !has_edit {
            problems.push("error_flag is set but every reference is empty".to_string());
        }
        if !self.error_flag && has_edit {
            problems.push("error_flag is unset but a reference carries edits".to_string());
        }
        if self.error_flag && self.error_types.is_empty() {
            problems.push("error_flag is set but no error type is given".to_string());
        }
        if !self.error_flag && !self.error_types.is_empty() {
            problems.push("error types are given for a correct sentence".to_string());
        }
        problems
    }
}

/// Identifies an item inside a reference for violation reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ItemRef {
    pub op: OpKind,
    pub index: usize,
}

impl fmt::Display for ItemRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.op, self.index)
    }
}

/// A single reason a reference does not fit a sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    SwitchLength { expected: usize, found: usize },
    NotAPermutation { index: usize },
    IndexOutOfRange { item: ItemRef, index: usize, len: usize },
    DeletesNotIncreasing { item: ItemRef },
    ZeroCount { item: ItemRef },
    LabelCountMismatch { item: ItemRef, count: usize, label_len: usize },
    EmptyModifyLabel { item: ItemRef },
    Overlap { first: ItemRef, second: ItemRef },
    /// Strict mode only: a modify span is no longer contiguous after the switch.
    SplitBySwitch { item: ItemRef },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SwitchLength { expected, found } => write!(
                f,
                "switch order has {found} entries, sentence has {expected} characters"
            ),
            Violation::NotAPermutation { index } => {
                write!(f, "not a permutation: index {index} is repeated or missing")
            }
            Violation::IndexOutOfRange { item, index, len } => {
                write!(f, "index out of range: {item} refers to {index}, length is {len}")
            }
            Violation::DeletesNotIncreasing { item } => {
                write!(f, "{item}: delete positions must be strictly increasing")
            }
            Violation::ZeroCount { item } => write!(f, "{item}: count must be positive"),
            Violation::LabelCountMismatch {
                item,
                count,
                label_len,
            } => write!(
                f,
                "label/count mismatch: {item} declares {count} characters, label has {label_len}"
            ),
            Violation::EmptyModifyLabel { item } => write!(f, "{item}: modify label is empty"),
            Violation::Overlap { first, second } => {
                write!(f, "overlapping spans: {first} and {second}")
            }
            Violation::SplitBySwitch { item } => {
                write!(f, "{item}: modify span is split by the switch order")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ValidationOptions {
    /// Reject modify spans whose characters are no longer adjacent after the
    /// switch is applied.
    pub strict_switch: bool,
}

pub fn validate_reference(s: &Sentence, r: &Reference) -> Vec<Violation> {
    validate_reference_with(s, r, ValidationOptions::default())
}

pub fn validate_reference_with(s: &Sentence, r: &Reference, opts: ValidationOptions) -> Vec<Violation> {
    let n = s.len();
    let mut out = Vec::new();

    let mut switch_ok = false;
    if let Some(order) = &r.switch {
        if order.len() != n {
            out.push(Violation::SwitchLength {
                expected: n,
                found: order.len(),
            });
        }
        let mut seen = vec![false; n];
        let mut perm = order.len() == n;
        for (k, &i) in order.iter().enumerate() {
            if i >= n {
                out.push(Violation::IndexOutOfRange {
                    item: ItemRef { op: OpKind::Switch, index: k },
                    index: i,
                    len: n,
                });
                perm = false;
            } else if seen[i] {
                out.push(Violation::NotAPermutation { index: i });
                perm = false;
            } else {
                seen[i] = true;
            }
        }
        switch_ok = perm;
    }

    // claims[i] = item that consumes original character i
    let mut claims: Vec<Option<ItemRef>> = vec![None; n];
    let claim = |claims: &mut Vec<Option<ItemRef>>, out: &mut Vec<Violation>, i: usize, item: ItemRef| {
        match claims[i] {
            Some(first) => out.push(Violation::Overlap {
                first,
                second: item,
            }),
            None => claims[i] = Some(item),
        }
    };

    let del_item = ItemRef { op: OpKind::Delete, index: 0 };
    for (k, &p) in r.deletes.iter().enumerate() {
        if k > 0 && r.deletes[k - 1] >= p {
            out.push(Violation::DeletesNotIncreasing { item: del_item });
        }
        if p >= n {
            out.push(Violation::IndexOutOfRange {
                item: ItemRef { op: OpKind::Delete, index: k },
                index: p,
                len: n,
            });
        } else if claims[p].is_none() {
            claims[p] = Some(ItemRef { op: OpKind::Delete, index: k });
        }
    }

    for (k, m) in r.modifies.iter().enumerate() {
        let item = ItemRef { op: OpKind::Modify, index: k };
        if m.span == 0 {
            out.push(Violation::ZeroCount { item });
        }
        if m.label.is_empty() {
            out.push(Violation::EmptyModifyLabel { item });
        }
        let end = m.pos.saturating_add(m.span.max(1));
        if end > n {
            out.push(Violation::IndexOutOfRange {
                item,
                index: end - 1,
                len: n,
            });
            continue;
        }
        for i in m.pos..end {
            claim(&mut claims, &mut out, i, item);
        }
    }

    for (k, ins) in r.inserts.iter().enumerate() {
        let item = ItemRef { op: OpKind::Insert, index: k };
        if ins.count == 0 {
            out.push(Violation::ZeroCount { item });
        }
        if ins.count != ins.label.len() {
            out.push(Violation::LabelCountMismatch {
                item,
                count: ins.count,
                label_len: ins.label.len(),
            });
        }
        if ins.pos >= n {
            out.push(Violation::IndexOutOfRange {
                item,
                index: ins.pos,
                len: n,
            });
            continue;
        }
        // The gap after `pos` must not fall strictly inside a modify span.
        for (mk, m) in r.modifies.iter().enumerate() {
            if m.span > 1 && ins.pos >= m.pos && ins.pos + 1 < m.pos + m.span {
                out.push(Violation::Overlap {
                    first: ItemRef { op: OpKind::Modify, index: mk },
                    second: item,
                });
            }
        }
    }

    if opts.strict_switch && switch_ok && r.has_effective_switch() {
        let order = r.switch.as_ref().unwrap();
        let mut slot = vec![0usize; n];
        for (k, &i) in order.iter().enumerate() {
            slot[i] = k;
        }
        for (k, m) in r.modifies.iter().enumerate() {
            if m.pos + m.span <= n && (m.pos + 1..m.pos + m.span).any(|i| slot[i] != slot[i - 1] + 1) {
                out.push(Violation::SplitBySwitch {
                    item: ItemRef { op: OpKind::Modify, index: k },
                });
            }
        }
    }

    out
}

/// What happens to one original character during application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Fate<'a> {
    Keep,
    Drop,
    Replace(&'a [char]),
}

/// Per-original-index fate and trailing insertions of a validated reference.
pub(crate) struct Attached<'a> {
    pub fates: Vec<Fate<'a>>,
    pub after: Vec<Vec<char>>,
    pub order: Vec<usize>,
}

pub(crate) fn attach<'a>(n: usize, r: &'a Reference) -> Attached<'a> {
    let mut fates = vec![Fate::Keep; n];
    let mut after = vec![Vec::new(); n];
    for &p in &r.deletes {
        fates[p] = Fate::Drop;
    }
    for m in &r.modifies {
        fates[m.pos] = Fate::Replace(&m.label);
        for f in &mut fates[m.pos + 1..m.pos + m.span] {
            *f = Fate::Drop;
        }
    }
    for ins in &r.inserts {
        after[ins.pos].extend_from_slice(&ins.label);
    }
    let order = r.switch.clone().unwrap_or_else(|| (0..n).collect());
    Attached { fates, after, order }
}

/// Realizes `r` on `s`. Fails without partial output if `r` does not validate.
pub fn apply_reference(s: &Sentence, r: &Reference) -> Result<Sentence> {
    apply_reference_with(s, r, ValidationOptions::default())
}

pub fn apply_reference_with(s: &Sentence, r: &Reference, opts: ValidationOptions) -> Result<Sentence> {
    let violations = validate_reference_with(s, r, opts);
    if !violations.is_empty() {
        return Err(Error::InvalidReference(violations));
    }
    if r.is_empty() {
        return Ok(s.clone());
    }
    let chars = s.chars();
    let att = attach(chars.len(), r);
    let mut out = Vec::with_capacity(chars.len() + 8);
    for &i in &att.order {
        match att.fates[i] {
            Fate::Keep => out.push(chars[i]),
            Fate::Drop => {}
            Fate::Replace(label) => out.extend_from_slice(label),
        }
        out.extend_from_slice(&att.after[i]);
    }
    Ok(Sentence::from_chars(out))
}
