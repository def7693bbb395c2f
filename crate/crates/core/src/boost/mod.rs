//! Gradient-boosted trees on the logistic loss with three profiles that
//! share one additive training loop and differ in growth policy, sampling
//! and penalty.

mod loss;
mod model;
mod params;
mod train;

pub use loss::{logloss, logloss_grad_hess, mean_logloss, sigmoid, GradHess};
pub use model::{
    predict_boosted, regularized_objective, BoostPrediction, BoostedModel, RoundLog,
    BOOSTED_MODEL_TYPE,
};
pub use params::{BoostParams, BoostProfile};
pub use train::{ordered_fold_gradients, train_boosted, Holdout};
