use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{FeatureSampling, GrowthPolicy, RegularizationParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostProfile {
    /// Depth-wise trees, `γT + ½λ‖w‖²` penalty.
    Xgb,
    /// Symmetric trees, ordered boosting, `λ‖w‖² + αT` penalty.
    Cat,
    /// Leaf-wise trees, `γT + ½λ‖w‖²` penalty.
    Lgbm,
}

impl BoostProfile {
    pub fn as_str(self) -> &'static str {
        match self {
            BoostProfile::Xgb => "xgb",
            BoostProfile::Cat => "cat",
            BoostProfile::Lgbm => "lgbm",
        }
    }
}

impl std::fmt::Display for BoostProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BoostProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xgb" => Ok(BoostProfile::Xgb),
            "cat" => Ok(BoostProfile::Cat),
            "lgbm" => Ok(BoostProfile::Lgbm),
            other => Err(Error::InvalidParam(format!(
                "unknown boosting profile {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub profile: BoostProfile,
    pub learning_rate: f64,
    pub n_rounds: usize,
    pub growth: GrowthPolicy,
    /// `lambda` is read in the profile's own penalty convention.
    pub reg: RegularizationParams,
    /// Row fraction drawn without replacement each round.
    #[serde(alias = "bagging_fraction")]
    pub subsample: f64,
    /// Column fraction drawn once per tree.
    #[serde(alias = "feature_fraction")]
    pub colsample_bytree: f64,
    /// Column fraction re-drawn at every split.
    pub rsm: f64,
    /// 0 disables early stopping.
    pub early_stopping_patience: usize,
    /// Stratified share of the training rows held out for early stopping
    /// when no explicit holdout is given.
    pub validation_fraction: f64,
    /// Cross-fitted gradients for tree structure (cat profile).
    pub ordered: bool,
    /// Raw-score offset; `None` means the log-odds of the training
    /// positive rate.
    pub base_score: Option<f64>,
}

impl BoostParams {
    fn shared(profile: BoostProfile, learning_rate: f64, growth: GrowthPolicy) -> Self {
        BoostParams {
            profile,
            learning_rate,
            n_rounds: 200,
            growth,
            reg: RegularizationParams::default(),
            subsample: 1.0,
            colsample_bytree: 1.0,
            rsm: 1.0,
            early_stopping_patience: 20,
            validation_fraction: 0.1,
            ordered: false,
            base_score: None,
        }
    }

    pub fn xgb() -> Self {
        let mut p = Self::shared(
            BoostProfile::Xgb,
            0.075,
            GrowthPolicy::DepthWise { max_depth: 8 },
        );
        p.reg.min_child_weight = 5.0;
        p
    }

    pub fn cat() -> Self {
        let mut p = Self::shared(
            BoostProfile::Cat,
            0.05,
            GrowthPolicy::Symmetric { depth: 8 },
        );
        p.rsm = 0.8;
        p.ordered = true;
        p
    }

    pub fn lgbm() -> Self {
        let mut p = Self::shared(
            BoostProfile::Lgbm,
            0.05,
            GrowthPolicy::LeafWise {
                num_leaves: 63,
                max_depth: None,
            },
        );
        p.colsample_bytree = 0.9;
        p.subsample = 0.9;
        p.reg.min_data_in_leaf = 5;
        p
    }

    pub fn for_profile(profile: BoostProfile) -> Self {
        match profile {
            BoostProfile::Xgb => Self::xgb(),
            BoostProfile::Cat => Self::cat(),
            BoostProfile::Lgbm => Self::lgbm(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "learning_rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.n_rounds < 1 {
            return Err(Error::InvalidParam("n_rounds must be >= 1".into()));
        }
        for (name, v) in [
            ("subsample", self.subsample),
            ("colsample_bytree", self.colsample_bytree),
            ("rsm", self.rsm),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParam(format!(
                    "{name} must be in (0,1], got {v}"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidParam(format!(
                "validation_fraction must be in [0,1), got {}",
                self.validation_fraction
            )));
        }
        if let Some(b) = self.base_score {
            if !b.is_finite() {
                return Err(Error::InvalidParam("base_score must be finite".into()));
            }
        }
        self.growth.validate()?;
        self.reg.validate()
    }

    pub(crate) fn sampling(&self) -> FeatureSampling {
        FeatureSampling {
            per_tree: self.colsample_bytree,
            per_split: self.rsm,
        }
    }

    /// Penalties as seen by the tree grower, whose leaf solve uses the
    /// `½λ‖w‖²` form.
    pub(crate) fn tree_reg(&self) -> RegularizationParams {
        let mut reg = self.reg.clone();
        if self.profile == BoostProfile::Cat {
            reg.lambda *= 2.0;
        }
        reg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_defaults() {
        let x = BoostParams::xgb();
        assert_eq!(
            (x.learning_rate, x.reg.min_child_weight, x.subsample),
            (0.075, 5.0, 1.0)
        );
        assert_eq!(x.growth, GrowthPolicy::DepthWise { max_depth: 8 });
        let c = BoostParams::cat();
        assert_eq!((c.learning_rate, c.rsm), (0.05, 0.8));
        assert_eq!(c.growth, GrowthPolicy::Symmetric { depth: 8 });
        let l = BoostParams::lgbm();
        assert_eq!(
            (l.colsample_bytree, l.subsample, l.reg.min_data_in_leaf),
            (0.9, 0.9, 5)
        );
        for p in [x, c, l] {
            p.validate().unwrap();
            assert_eq!(
                (p.n_rounds, p.early_stopping_patience, p.reg.lambda),
                (200, 20, 1.0)
            );
        }
    }

    #[test]
    fn aliases_and_profile_names() {
        let mut v = serde_json::to_value(BoostParams::lgbm()).unwrap();
        let obj = v.as_object_mut().unwrap();
        obj.remove("subsample");
        obj.remove("colsample_bytree");
        obj.insert("bagging_fraction".into(), 0.7.into());
        obj.insert("feature_fraction".into(), 0.6.into());
        let p: BoostParams = serde_json::from_value(v).unwrap();
        assert_eq!((p.subsample, p.colsample_bytree), (0.7, 0.6));
        assert_eq!("cat".parse::<BoostProfile>().unwrap(), BoostProfile::Cat);
        assert!("gbm".parse::<BoostProfile>().is_err());
    }

    #[test]
    fn invalid() {
        let mut p = BoostParams::xgb();
        p.subsample = 0.0;
        assert!(p.validate().is_err());
        let mut p = BoostParams::xgb();
        p.n_rounds = 0;
        assert!(p.validate().is_err());
    }
}
