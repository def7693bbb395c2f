use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{logloss, sigmoid};
use super::params::{BoostParams, BoostProfile};
use crate::error::{Error, Result};
use crate::features::BinnedView;
use crate::tree::{predict_tree, DecisionTree, RegularizationParams};

pub const BOOSTED_MODEL_TYPE: &str = "boosted";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    pub train_loss: f64,
    pub valid_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub model_type: String,
    pub profile: BoostProfile,
    pub params: BoostParams,
    pub seed: u64,
    /// Log-odds offset.
    pub base_score: f64,
    pub eta: f64,
    pub n_features: usize,
    /// Rounds kept after early stopping.
    pub best_rounds: usize,
    pub history: Vec<RoundLog>,
    pub trees: Vec<DecisionTree>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostPrediction {
    pub class: u8,
    pub prob_attack: f64,
    pub raw_score: f64,
}

impl BoostPrediction {
    pub(crate) fn from_raw(raw_score: f64) -> Self {
        let prob_attack = sigmoid(raw_score);
        BoostPrediction {
            class: u8::from(prob_attack >= 0.5),
            prob_attack,
            raw_score,
        }
    }
}

impl BoostedModel {
    /// Raw score using the first `k` trees only.
    pub fn raw_prefix(&self, row: &[u8], k: usize) -> Result<f64> {
        if row.len() != self.n_features {
            return Err(Error::Schema(format!(
                "model expects {} features, got {}",
                self.n_features,
                row.len()
            )));
        }
        let mut raw = self.base_score;
        for t in &self.trees[..k.min(self.trees.len())] {
            raw += self.eta * predict_tree(t, row)?;
        }
        Ok(raw)
    }

    pub fn predict_row(&self, row: &[u8]) -> Result<BoostPrediction> {
        self.raw_prefix(row, self.trees.len())
            .map(BoostPrediction::from_raw)
    }

    pub fn raw_scores(&self, view: &BinnedView) -> Result<Vec<f64>> {
        if view.n_features() != self.n_features {
            return Err(Error::Schema(format!(
                "model expects {} features, got {}",
                self.n_features,
                view.n_features()
            )));
        }
        Ok((0..view.n_rows)
            .into_par_iter()
            .map(|r| {
                let mut raw = self.base_score;
                for t in &self.trees {
                    raw += self.eta * t.predict_binned(view, r);
                }
                raw
            })
            .collect())
    }

    pub fn predict_view(&self, view: &BinnedView) -> Result<Vec<BoostPrediction>> {
        Ok(self
            .raw_scores(view)?
            .into_iter()
            .map(BoostPrediction::from_raw)
            .collect())
    }
}

pub fn predict_boosted(model: &BoostedModel, row: &[u8]) -> Result<BoostPrediction> {
    model.predict_row(row)
}

/// Summed logistic loss over `view` plus the profile's tree penalty:
/// `Σ γT + ½λ‖w‖²` for xgb and lgbm, `Σ λ‖w‖² + αT` for cat, where `T` is a
/// tree's leaf count and `w` its leaf values.
pub fn regularized_objective(
    model: &BoostedModel,
    view: &BinnedView,
    labels: &[u8],
    reg: &RegularizationParams,
) -> Result<f64> {
    if labels.len() != view.n_rows {
        return Err(Error::Schema(format!(
            "{} labels for {} rows",
            labels.len(),
            view.n_rows
        )));
    }
    let raw = model.raw_scores(view)?;
    let data: f64 = labels.iter().zip(&raw).map(|(&y, &s)| logloss(y, s)).sum();
    let penalty: f64 = model
        .trees
        .iter()
        .map(|t| {
            let leaves = t.n_leaves() as f64;
            let sq: f64 = t.leaf_values().iter().map(|w| w * w).sum();
            match model.profile {
                BoostProfile::Cat => reg.lambda * sq + reg.alpha * leaves,
                BoostProfile::Xgb | BoostProfile::Lgbm => {
                    reg.gamma * leaves + 0.5 * reg.lambda * sq
                }
            }
        })
        .sum();
    Ok(data + penalty)
}
