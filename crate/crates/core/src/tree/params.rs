use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Penalties and child constraints shared by every tree learner.
///
/// `lambda` is the L2 coefficient on leaf weights in the `½·λ·‖w‖²` form,
/// `gamma` the per-leaf penalty charged by split gains. `alpha` is the
/// per-leaf penalty of the symmetric-tree profile; it enters the reported
/// objective only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizationParams {
    pub lambda: f64,
    pub gamma: f64,
    pub alpha: f64,
    /// A node with fewer rows is never split.
    pub min_samples_split: usize,
    /// Minimum rows in each child.
    pub min_data_in_leaf: usize,
    /// Minimum hessian sum in each child (gradient trees only).
    pub min_child_weight: f64,
}

impl Default for RegularizationParams {
    fn default() -> Self {
        RegularizationParams {
            lambda: 1.0,
            gamma: 0.0,
            alpha: 0.0,
            min_samples_split: 2,
            min_data_in_leaf: 1,
            min_child_weight: 0.0,
        }
    }
}

impl RegularizationParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("min_child_weight", self.min_child_weight),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParam(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum GrowthPolicy {
    /// Expand every frontier node level by level.
    DepthWise { max_depth: usize },
    /// Repeatedly split the leaf with the largest gain.
    LeafWise {
        num_leaves: usize,
        max_depth: Option<usize>,
    },
    /// One split per level shared by all nodes of that level.
    Symmetric { depth: usize },
}

impl GrowthPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GrowthPolicy::DepthWise { max_depth }
            | GrowthPolicy::Symmetric { depth: max_depth } => {
                if max_depth < 1 {
                    return Err(Error::InvalidParam("tree depth must be >= 1".into()));
                }
            }
            GrowthPolicy::LeafWise {
                num_leaves,
                max_depth,
            } => {
                if num_leaves < 2 {
                    return Err(Error::InvalidParam("num_leaves must be >= 2".into()));
                }
                if max_depth == Some(0) {
                    return Err(Error::InvalidParam("max_depth cap must be >= 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// Column subsampling: a fraction drawn once per tree, then a fraction of
/// those re-drawn at every split (every level for symmetric trees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSampling {
    pub per_tree: f64,
    pub per_split: f64,
}

impl FeatureSampling {
    pub const ALL: FeatureSampling = FeatureSampling {
        per_tree: 1.0,
        per_split: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("per_tree", self.per_tree), ("per_split", self.per_split)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParam(format!(
                    "feature fraction {name} must be in (0,1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for FeatureSampling {
    fn default() -> Self {
        FeatureSampling::ALL
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_values_rejected() {
        let reg = RegularizationParams {
            lambda: -1.0,
            ..Default::default()
        };
        assert!(reg.validate().is_err());
        assert!(GrowthPolicy::DepthWise { max_depth: 0 }.validate().is_err());
        assert!(GrowthPolicy::LeafWise {
            num_leaves: 1,
            max_depth: None
        }
        .validate()
        .is_err());
        assert!(FeatureSampling {
            per_tree: 0.0,
            per_split: 1.0
        }
        .validate()
        .is_err());
        assert!(RegularizationParams::default().validate().is_ok());
    }
}
