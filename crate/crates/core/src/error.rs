use thiserror::Error;

use crate::model::Violation;

/// Errors raised by the edit, codec and scoring routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid reference: {}", join_violations(.0))]
    InvalidReference(Vec<Violation>),
    #[error("no common character between source and target")]
    NoCommonSubstring,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("cannot derive edits for an empty source sentence")]
    EmptySource,
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("pointer chain revisits or skips an index: {0}")]
    CycleOrOrphan(String),
    #[error("character {position} needs {required} generated characters beyond the tag limit of {limit}")]
    InsertionTooLong {
        position: usize,
        required: usize,
        limit: usize,
    },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("template has {slots} mask slots but {fills} fill characters were given")]
    FillCountMismatch { slots: usize, fills: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate score matrix: {0}")]
    DegenerateMatrix(String),
    #[error("empty input")]
    EmptyInput,
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
