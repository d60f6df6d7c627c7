//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("unknown {kind} label {label:?} at line {line}")]
    UnknownLabel {
        kind: &'static str,
        label: String,
        line: usize,
    },

    #[error("duplicate instance id {id:?} at line {line}")]
    DuplicateInstanceId { id: String, line: usize },

    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("bundle alignment failed: {0}")]
    Alignment(String),

    #[error("support filtering removed every attribute (min_count={min_count})")]
    EmptyVocabularyAfterFilter { min_count: u64 },

    #[error("instance {id:?} has {count} attributes, exceeding the per-instance cap of {cap}")]
    AttributeCapExceeded { id: String, count: usize, cap: usize },

    #[error("combination universe is empty")]
    EmptyUniverse,

    #[error("all (group, combination) pairs were excluded")]
    AllPairsExcluded,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("no candidate instance to duplicate for attribute {attribute:?} with group {group:?}")]
    NoOversampleCandidate { attribute: String, group: String },

    #[error(
        "oversampling did not converge within {max_rounds} rounds \
         (worst residual deviation {residual} for attribute {attribute:?})"
    )]
    OversampleBudgetExhausted {
        max_rounds: u64,
        residual: f64,
        attribute: String,
    },

    #[error("group {group:?} has {available} instances, fewer than the requested {requested}")]
    InsufficientGroupInstances {
        group: String,
        available: usize,
        requested: usize,
    },

    #[error("every per-attribute count is zero")]
    AllCountsZero,

    #[error("joint fitting budget exhausted (worst residual {residual} for {target})")]
    InfeasibleTargets { residual: f64, target: String },

    #[error("prediction target unreachable: {0}")]
    UnreachableTarget(String),

    #[error("oracle bounds exceeded: {0}")]
    OracleBounds(String),
}

pub type Result<T> = std::result::Result<T, Error>;
