//! NSL-KDD ingestion: schema, attack-class grouping, parsing, caching and
//! the class-count check against the published distribution.

mod cache;
mod dataset;
mod parse;
mod report;
mod schema;

pub use cache::{read_cache, write_cache};
pub use dataset::{
    binarize, class_counts, AttackClass, Column, ColumnData, Dataset, SharedVocab, SplitTag, Vocab,
    UNKNOWN_CODE, UNKNOWN_TOKEN,
};
pub use parse::{attack_map, classify_attack, parse_nslkdd, parse_reader, ATTACK_MAP_VERSION};
pub use report::{
    check_reference_counts, ClassCountCheck, SplitCountReport, REFERENCE_TEST_COUNTS,
    REFERENCE_TEST_TOTAL_PRINTED, REFERENCE_TRAIN_COUNTS, REFERENCE_TRAIN_TOTAL,
};
pub use schema::{DatasetSchema, FeatureKind, FeatureSpec, NSL_KDD_CATEGORICAL, NSL_KDD_FEATURES};
