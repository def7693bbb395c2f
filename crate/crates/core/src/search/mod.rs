//! Stratified k-fold cross-validation and sequential model-based
//! hyperparameter search.

mod cv;
mod folds;
mod space;
mod tpe;

pub use cv::{cross_validate, tune, CvOutcome, FoldRecord};
pub use folds::{make_folds, FoldPlan};
pub use space::{
    apply_point, default_spaces, Domain, HyperparamSpace, ParamPoint, DEFAULT_SPACE_VERSION,
};
pub use tpe::{
    mean_std, select_best, tune_with, Trial, TuneOutcome, TunerConfig, CANDIDATES_PER_PROPOSAL,
};
