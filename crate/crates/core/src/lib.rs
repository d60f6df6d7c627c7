//! Single- and multi-attribute bias amplification metrics over multi-label
//! classification datasets, plus data-level mitigation (greedy oversampling
//! and coefficient-of-variation data repair), synthetic dataset tooling, and
//! a brute-force oracle used to validate the optimized paths.

pub mod balance;
pub mod cooccur;
pub mod error;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod synth;

pub use error::{Error, Result};
pub use model::{
    align_bundle, filter_by_support, ingest_dataset, ingest_dataset_from_reader, AttrId,
    AttributeSet, AttributeVocabulary, Dataset, DatasetRole, EvaluationBundle, GroupId,
    GroupVocabulary, IngestOptions, Instance, SupportScope,
};
