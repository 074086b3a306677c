//! Corpus files: parsing, validation and summary statistics.

pub mod format;
pub mod stats;
pub mod validate;

pub use format::{
    parse_corpus, parse_corpus_str, reference_from_json, reference_to_json, serialize_corpus,
    CorpusError, ParseOptions, ParseOutcome, SchemaError,
};
pub use stats::{compute_stats, tag_coverage, CorpusStats, DeleteUnit, LengthStats, OpCounts, StatsOptions, TagCoverage};
pub use validate::{validate_corpus, Issue, IssueKind, ValidationReport};
