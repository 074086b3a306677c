//! Operation-oriented edits for grammatical error correction.
//!
//! Corrections are expressed with four operations (Switch, Delete, Insert,
//! Modify) over the characters of the original sentence. This crate applies
//! and validates them, derives minimal labels from sentence pairs, converts
//! them to tagger-style machine labels and back, scores hypotheses against
//! multiple references, and reads FCGEC-format corpora.

pub mod align;
pub mod corpus;
mod error;
pub mod metrics;
pub mod min_edit;
pub mod model;
pub mod stg;

pub use error::{Error, Result};
pub use min_edit::{derive_operations, normalize_reference};
pub use model::{
    apply_reference, op_count, validate_reference, CorrectionInstance, EditOperation, ErrorType,
    Insert, Modify, Reference, Sentence, ValidationOptions, Violation,
};
