//! One interface over every learner: encode, bin, fit and score a table.

use serde::{Deserialize, Serialize};

use crate::boost::{train_boosted, BoostParams, BoostProfile, BoostedModel, Holdout};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::features::{
    build_bins, build_encoding, BinMapper, CategoricalStrategy, EncodingPlan, FittedEncoding,
    DEFAULT_MAX_BINS,
};
use crate::forest::{train_forest, ForestModel, ForestParams};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerId {
    Forest,
    Xgb,
    Cat,
    Lgbm,
}

impl LearnerId {
    pub const ALL: [LearnerId; 4] = [
        LearnerId::Forest,
        LearnerId::Xgb,
        LearnerId::Cat,
        LearnerId::Lgbm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerId::Forest => "forest",
            LearnerId::Xgb => "xgb",
            LearnerId::Cat => "cat",
            LearnerId::Lgbm => "lgbm",
        }
    }

    /// Row label in the results table.
    pub fn display_name(self) -> &'static str {
        match self {
            LearnerId::Forest => "RF",
            LearnerId::Xgb => "XGBoost",
            LearnerId::Cat => "CatBoost",
            LearnerId::Lgbm => "LGBM",
        }
    }

    pub fn default_spec(self) -> LearnerSpec {
        match self {
            LearnerId::Forest => LearnerSpec::Forest(ForestParams::default()),
            LearnerId::Xgb => LearnerSpec::Boost(BoostParams::xgb()),
            LearnerId::Cat => LearnerSpec::Boost(BoostParams::cat()),
            LearnerId::Lgbm => LearnerSpec::Boost(BoostParams::lgbm()),
        }
    }

    /// Categorical handling: integer codes for all but the cat profile,
    /// which uses ordered target statistics.
    pub fn default_strategy(self) -> CategoricalStrategy {
        match self {
            LearnerId::Cat => CategoricalStrategy::OrderedTarget,
            _ => CategoricalStrategy::Passthrough,
        }
    }
}

impl std::fmt::Display for LearnerId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LearnerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forest" | "rf" => Ok(LearnerId::Forest),
            "xgb" => Ok(LearnerId::Xgb),
            "cat" => Ok(LearnerId::Cat),
            "lgbm" => Ok(LearnerId::Lgbm),
            other => Err(Error::InvalidParam(format!("unknown learner {other:?}"))),
        }
    }
}

/// A learner with a full parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", content = "params", rename_all = "snake_case")]
pub enum LearnerSpec {
    Forest(ForestParams),
    Boost(BoostParams),
    /// Predicts the training positive rate for every row.
    Prior,
}

impl LearnerSpec {
    pub fn id(&self) -> Option<LearnerId> {
        match self {
            LearnerSpec::Forest(_) => Some(LearnerId::Forest),
            LearnerSpec::Boost(p) => Some(match p.profile {
                BoostProfile::Xgb => LearnerId::Xgb,
                BoostProfile::Cat => LearnerId::Cat,
                BoostProfile::Lgbm => LearnerId::Lgbm,
            }),
            LearnerSpec::Prior => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerSpec::Forest(p) => p.validate(),
            LearnerSpec::Boost(p) => p.validate(),
            LearnerSpec::Prior => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    Forest(ForestModel),
    Boosted(BoostedModel),
    Prior { prob: f64 },
}

/// Everything needed to score raw rows: encoding state, bin boundaries and
/// the fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedLearner {
    pub spec: LearnerSpec,
    pub seed: u64,
    pub encoding: FittedEncoding,
    pub bins: BinMapper,
    pub model: TrainedModel,
}

/// Fitting options beyond the parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_bins: usize,
    pub strategy: Option<CategoricalStrategy>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_bins: DEFAULT_MAX_BINS,
            strategy: None,
        }
    }
}

/// Fits `spec` on `train`. `holdout`, when given, drives boosting early
/// stopping in place of an internal carve-out.
pub fn fit_learner(
    spec: &LearnerSpec,
    train: &Dataset,
    holdout: Option<&Dataset>,
    options: FitOptions,
    seed: u64,
) -> Result<TrainedLearner> {
    spec.validate()?;
    let strategy = options.strategy.unwrap_or_else(|| {
        spec.id().map_or(
            CategoricalStrategy::Passthrough,
            LearnerId::default_strategy,
        )
    });
    let encoded = build_encoding(
        train,
        &EncodingPlan::uniform(train, strategy),
        seed::derive(seed, "encoding"),
    )?;
    let view = build_bins(&encoded.dataset, options.max_bins)?;
    let model_seed = seed::derive(seed, "model");
    let model = match spec {
        LearnerSpec::Forest(p) => {
            TrainedModel::Forest(train_forest(&encoded.dataset, &view, p, model_seed)?)
        }
        LearnerSpec::Boost(p) => {
            let held = match holdout {
                Some(h) => {
                    let enc = encoded.fitted.transform(h)?;
                    Some((view.mapper.apply(&enc)?, h.labels.clone()))
                }
                None => None,
            };
            let holdout = held.as_ref().map(|(v, l)| Holdout { view: v, labels: l });
            TrainedModel::Boosted(train_boosted(
                &encoded.dataset,
                &view,
                p,
                holdout,
                model_seed,
            )?)
        }
        LearnerSpec::Prior => {
            if train.n_rows() == 0 {
                return Err(Error::Training("cannot fit on zero rows".into()));
            }
            TrainedModel::Prior {
                prob: train.positives() as f64 / train.n_rows() as f64,
            }
        }
    };
    Ok(TrainedLearner {
        spec: spec.clone(),
        seed,
        encoding: encoded.fitted,
        bins: view.mapper,
        model,
    })
}

impl TrainedLearner {
    /// Attack probability for every row of `ds`.
    pub fn predict_proba(&self, ds: &Dataset) -> Result<Vec<f64>> {
        if let TrainedModel::Prior { prob } = self.model {
            return Ok(vec![prob; ds.n_rows()]);
        }
        let view = self.bins.apply(&self.encoding.transform(ds)?)?;
        Ok(match &self.model {
            TrainedModel::Forest(m) => m
                .predict_view(&view)?
                .into_iter()
                .map(|p| p.prob_attack)
                .collect(),
            TrainedModel::Boosted(m) => m
                .predict_view(&view)?
                .into_iter()
                .map(|p| p.prob_attack)
                .collect(),
            TrainedModel::Prior { .. } => unreachable!(),
        })
    }

    /// Hard predictions at the 0.5 threshold (ties to attack); hard-majority
    /// forests use their own vote.
    pub fn predict_class(&self, ds: &Dataset) -> Result<Vec<u8>> {
        if let TrainedModel::Forest(m) = &self.model {
            let view = self.bins.apply(&self.encoding.transform(ds)?)?;
            return Ok(m
                .predict_view(&view)?
                .into_iter()
                .map(|p| p.class)
                .collect());
        }
        Ok(self
            .predict_proba(ds)?
            .into_iter()
            .map(|p| u8::from(p >= 0.5))
            .collect())
    }
}
