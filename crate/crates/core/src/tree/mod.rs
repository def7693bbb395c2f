//! Single decision trees over a binned view: impurity and gain, histogram
//! split search and the three growth policies shared by every ensemble.

mod grow;
mod histogram;
mod impurity;
mod model;
mod params;
mod split;

pub use grow::{grow_tree, leaf_weight, TreeTarget};
pub use impurity::gini_impurity;
pub use model::{predict_tree, DecisionTree, Node};
pub use params::{FeatureSampling, GrowthPolicy, RegularizationParams};
pub use split::{
    best_split_gini, best_split_grad, SplitCandidate, GAIN_TIE_TOLERANCE, MIN_SPLIT_GAIN,
};
