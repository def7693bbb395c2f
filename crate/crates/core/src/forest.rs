//! Random forests: bootstrapped, column-subsampled Gini trees combined by
//! vote.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::features::BinnedView;
use crate::seed;
use crate::tree::{
    grow_tree, predict_tree, DecisionTree, FeatureSampling, GrowthPolicy, RegularizationParams,
    TreeTarget,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteRule {
    /// Average the per-tree attack proportions and threshold at 0.5.
    #[default]
    ProbabilityMean,
    /// Each tree casts one vote; ties go to the attack class.
    HardMajority,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub max_features: f64,
    pub min_samples_split: usize,
    pub vote: VoteRule,
    /// Draw a bootstrap sample per tree; when false every tree sees all rows.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            max_depth: 4,
            max_features: 0.5,
            min_samples_split: 20,
            vote: VoteRule::ProbabilityMean,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::InvalidParam("n_trees must be >= 1".into()));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidParam("max_depth must be >= 1".into()));
        }
        if !(self.max_features > 0.0 && self.max_features <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "max_features must be in (0,1], got {}",
                self.max_features
            )));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParam("min_samples_split must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestPrediction {
    pub class: u8,
    pub prob_attack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub model_type: String,
    pub params: ForestParams,
    pub seed: u64,
    pub oob_accuracy: Option<f64>,
    pub trees: Vec<DecisionTree>,
}

pub const FOREST_MODEL_TYPE: &str = "random_forest";

/// `n` row indices drawn with replacement.
pub fn bootstrap_rows(n: usize, rng: &mut seed::Rng) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

pub fn train_forest(
    ds: &Dataset,
    view: &BinnedView,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    params.validate()?;
    let n = ds.n_rows();
    if view.n_rows != n {
        return Err(Error::Schema(format!(
            "binned view has {} rows, dataset {}",
            view.n_rows, n
        )));
    }
    if n == 0 {
        return Err(Error::Training("cannot train a forest on zero rows".into()));
    }
    let reg = RegularizationParams {
        min_samples_split: params.min_samples_split,
        ..RegularizationParams::default()
    };
    let sampling = FeatureSampling {
        per_tree: 1.0,
        per_split: params.max_features,
    };
    let labels = &ds.labels;
    let grown: Vec<(DecisionTree, Vec<usize>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::indexed_stream(seed, "forest", i as u64);
            let rows = if params.bootstrap {
                bootstrap_rows(n, &mut rng)
            } else {
                (0..n).collect()
            };
            let tree = grow_tree(
                view,
                &rows,
                TreeTarget::Gini {
                    labels,
                    n_classes: 2,
                },
                GrowthPolicy::DepthWise {
                    max_depth: params.max_depth,
                },
                &reg,
                sampling,
                &mut rng,
            )?;
            Ok((tree, rows))
        })
        .collect::<Result<_>>()?;

    let oob_accuracy = params
        .bootstrap
        .then(|| oob_accuracy(&grown, view, labels))
        .flatten();
    Ok(ForestModel {
        model_type: FOREST_MODEL_TYPE.into(),
        params: params.clone(),
        seed,
        oob_accuracy,
        trees: grown.into_iter().map(|(t, _)| t).collect(),
    })
}

fn oob_accuracy(
    grown: &[(DecisionTree, Vec<usize>)],
    view: &BinnedView,
    labels: &[u8],
) -> Option<f64> {
    let n = labels.len();
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for (tree, rows) in grown {
        let mut in_bag = vec![false; n];
        for &r in rows {
            in_bag[r] = true;
        }
        for r in (0..n).filter(|&r| !in_bag[r]) {
            sum[r] += tree.predict_binned(view, r);
            count[r] += 1;
        }
    }
    let scored: Vec<usize> = (0..n).filter(|&r| count[r] > 0).collect();
    if scored.is_empty() {
        return None;
    }
    let correct = scored
        .iter()
        .filter(|&&r| u8::from(sum[r] / count[r] as f64 >= 0.5) == labels[r])
        .count();
    Some(correct as f64 / scored.len() as f64)
}

fn combine(votes: impl Iterator<Item = f64>, k: usize, rule: VoteRule) -> ForestPrediction {
    let mut mean = 0.0;
    let mut attack_votes = 0usize;
    for p in votes {
        mean += p;
        attack_votes += usize::from(p > 0.5);
    }
    let prob_attack = mean / k as f64;
    let class = match rule {
        VoteRule::ProbabilityMean => u8::from(prob_attack >= 0.5),
        VoteRule::HardMajority => u8::from(2 * attack_votes >= k),
    };
    ForestPrediction { class, prob_attack }
}

impl ForestModel {
    /// Prediction for one binned row.
    pub fn predict_row(&self, row: &[u8]) -> Result<ForestPrediction> {
        let votes = self
            .trees
            .iter()
            .map(|t| predict_tree(t, row))
            .collect::<Result<Vec<_>>>()?;
        Ok(combine(
            votes.into_iter(),
            self.trees.len(),
            self.params.vote,
        ))
    }

    /// Predictions for every row of `view`.
    pub fn predict_view(&self, view: &BinnedView) -> Result<Vec<ForestPrediction>> {
        self.check_view(view)?;
        Ok((0..view.n_rows)
            .into_par_iter()
            .map(|r| {
                combine(
                    self.trees.iter().map(|t| t.predict_binned(view, r)),
                    self.trees.len(),
                    self.params.vote,
                )
            })
            .collect())
    }

    fn check_view(&self, view: &BinnedView) -> Result<()> {
        match self.trees.first() {
            Some(t) if t.n_features != view.n_features() => Err(Error::Schema(format!(
                "forest expects {} features, got {}",
                t.n_features,
                view.n_features()
            ))),
            _ => Ok(()),
        }
    }
}

pub fn predict_forest(model: &ForestModel, row: &[u8]) -> Result<ForestPrediction> {
    model.predict_row(row)
}
