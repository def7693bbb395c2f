//! Out-of-fold stacking: base models feed a logistic meta-learner, and a
//! greedy weighted blend runs over the base models and the meta-learner.

mod blend;
mod meta;
mod model;
mod oof;

pub use blend::{greedy_blend, EnsembleBlend};
pub use meta::{fit_logistic, fit_meta, MetaLearner, DEFAULT_META_LAMBDA};
pub use model::{
    cross_fit_meta, fit_stack, learner_bytes, learner_hash, predict_stacked, FlowStep, MemberRef,
    StackConfig, StackFit, StackedModel, StackedPrediction, META_ID, STACKED_MODEL_TYPE,
};
pub use oof::{build_oof, BaseMember, OofMatrix};
