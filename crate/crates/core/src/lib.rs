//! Tree-ensemble learners for binary network-intrusion detection on NSL-KDD:
//! random forests, three gradient-boosting profiles, cross-validated
//! sequential hyperparameter search, out-of-fold stacking and weighted
//! metric reports.

pub mod boost;
pub mod data;
pub mod error;
pub mod features;
pub mod forest;
pub mod hashing;
pub mod learner;
pub mod metrics;
pub mod pipeline;
pub mod search;
pub mod seed;
pub mod stack;
pub mod synth;
pub mod tree;

pub use error::{Error, Result};
