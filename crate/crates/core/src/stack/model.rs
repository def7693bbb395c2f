use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::blend::{greedy_blend, EnsembleBlend};
use super::meta::{fit_meta, MetaLearner, DEFAULT_META_LAMBDA};
use super::oof::{build_oof, BaseMember, OofMatrix};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hashing::sha256_hex;
use crate::learner::{fit_learner, FitOptions, TrainedLearner};
use crate::metrics::MetricId;
use crate::search::FoldPlan;

pub const STACKED_MODEL_TYPE: &str = "stacked";
pub const META_ID: &str = "meta";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StackConfig {
    pub meta_lambda: f64,
    pub blend_metric: MetricId,
    pub blend_max_iters: usize,
}

impl Default for StackConfig {
    fn default() -> Self {
        StackConfig {
            meta_lambda: DEFAULT_META_LAMBDA,
            blend_metric: MetricId::WeightedF1,
            blend_max_iters: 50,
        }
    }
}

/// One step of the fitting data flow: what was fitted and on which rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowStep {
    pub stage: String,
    /// `train_folds`, `oof` or `train_full`.
    pub input: String,
    pub rows: usize,
}

/// A base model file, addressed by the SHA-256 of its JSON bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberRef {
    pub id: String,
    pub hash: String,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedModel {
    pub model_type: String,
    pub members: Vec<MemberRef>,
    pub meta: MetaLearner,
    pub blend: EnsembleBlend,
    pub fold_hash: String,
    pub flow: Vec<FlowStep>,
}

/// Result of [`fit_stack`]: the refit base models plus everything fitted on
/// out-of-fold columns.
#[derive(Debug, Clone)]
pub struct StackFit {
    pub oof: OofMatrix,
    /// Cross-fitted meta-learner probabilities.
    pub meta_oof: Vec<f64>,
    pub meta: MetaLearner,
    pub blend: EnsembleBlend,
    pub learners: Vec<TrainedLearner>,
    pub flow: Vec<FlowStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackedPrediction {
    pub class: u8,
    pub prob_attack: f64,
    /// Base-model probabilities in member order, then the meta probability.
    pub members: Vec<f64>,
}

/// Bytes a member file is written as, and hashed from.
pub fn learner_bytes(learner: &TrainedLearner) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec(learner)?)
}

pub fn learner_hash(learner: &TrainedLearner) -> Result<String> {
    Ok(sha256_hex(&learner_bytes(learner)?))
}

fn rows_of(columns: &[Vec<f64>], rows: &[usize]) -> Vec<Vec<f64>> {
    columns
        .iter()
        .map(|c| rows.iter().map(|&r| c[r]).collect())
        .collect()
}

/// Meta-learner probabilities where each fold is scored by a meta-learner
/// fitted on the other folds' out-of-fold columns.
pub fn cross_fit_meta(
    oof: &OofMatrix,
    labels: &[u8],
    folds: &FoldPlan,
    lambda: f64,
) -> Result<Vec<f64>> {
    if folds.hash() != oof.fold_hash {
        return Err(Error::Schema(
            "meta cross-fit must reuse the out-of-fold plan".into(),
        ));
    }
    let parts = (0..folds.k)
        .into_par_iter()
        .map(|f| {
            let train = folds.train_rows(f);
            let valid = folds.valid_rows(f);
            let y: Vec<u8> = train.iter().map(|&r| labels[r]).collect();
            let meta = fit_meta(&rows_of(&oof.columns, &train), &y, lambda)?;
            Ok((
                valid.clone(),
                meta.predict_columns(&rows_of(&oof.columns, &valid)),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![f64::NAN; labels.len()];
    for (rows, probs) in parts {
        for (r, p) in rows.into_iter().zip(probs) {
            out[r] = p;
        }
    }
    Ok(out)
}

/// Cross-fits every base model, fits the meta-learner and the blend on the
/// out-of-fold columns only, then refits the base models on all of `ds`.
pub fn fit_stack(
    ds: &Dataset,
    members: &[BaseMember],
    folds: &FoldPlan,
    options: FitOptions,
    config: &StackConfig,
) -> Result<StackFit> {
    let n = ds.n_rows();
    let mut flow = Vec::new();
    let oof = build_oof(ds, members, folds, options)?;
    for m in members {
        flow.push(FlowStep {
            stage: format!("oof:{}", m.id),
            input: "train_folds".into(),
            rows: n,
        });
    }
    let meta_oof = cross_fit_meta(&oof, &ds.labels, folds, config.meta_lambda)?;
    let meta = fit_meta(&oof.columns, &ds.labels, config.meta_lambda)?;
    flow.push(FlowStep {
        stage: "meta".into(),
        input: "oof".into(),
        rows: n,
    });

    let mut ids = oof.model_ids.clone();
    ids.push(META_ID.into());
    let mut columns = oof.columns.clone();
    columns.push(meta_oof.clone());
    let blend = greedy_blend(
        &ids,
        &columns,
        &ds.labels,
        config.blend_metric,
        config.blend_max_iters,
    )?;
    flow.push(FlowStep {
        stage: "blend".into(),
        input: "oof".into(),
        rows: n,
    });

    let learners = members
        .iter()
        .map(|m| fit_learner(&m.spec, ds, None, options, m.seed))
        .collect::<Result<Vec<_>>>()?;
    for m in members {
        flow.push(FlowStep {
            stage: format!("refit:{}", m.id),
            input: "train_full".into(),
            rows: n,
        });
    }
    Ok(StackFit {
        oof,
        meta_oof,
        meta,
        blend,
        learners,
        flow,
    })
}

impl StackFit {
    /// The stacked container, with member `files` named in member order.
    pub fn to_model(&self, files: &[String]) -> Result<StackedModel> {
        if files.len() != self.learners.len() {
            return Err(Error::InvalidParam("one file name per base model".into()));
        }
        let members = self
            .oof
            .model_ids
            .iter()
            .zip(&self.learners)
            .zip(files)
            .map(|((id, l), file)| {
                Ok(MemberRef {
                    id: id.clone(),
                    hash: learner_hash(l)?,
                    file: file.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StackedModel {
            model_type: STACKED_MODEL_TYPE.into(),
            members,
            meta: self.meta.clone(),
            blend: self.blend.clone(),
            fold_hash: self.oof.fold_hash.clone(),
            flow: self.flow.clone(),
        })
    }
}

impl StackedModel {
    /// Checks that `learners` are exactly the referenced member files.
    pub fn verify_members(&self, learners: &[TrainedLearner]) -> Result<()> {
        if learners.len() != self.members.len() {
            return Err(Error::Schema(format!(
                "stack has {} members, got {} models",
                self.members.len(),
                learners.len()
            )));
        }
        for (m, l) in self.members.iter().zip(learners) {
            let h = learner_hash(l)?;
            if h != m.hash {
                return Err(Error::Schema(format!(
                    "member {} hash mismatch: {} vs {}",
                    m.id, h, m.hash
                )));
            }
        }
        Ok(())
    }
}

/// Scores every row: base probabilities, the meta probability over them and
/// the blend-weighted final probability (attack when ≥ 0.5).
pub fn predict_stacked(
    model: &StackedModel,
    learners: &[TrainedLearner],
    ds: &Dataset,
) -> Result<Vec<StackedPrediction>> {
    model.verify_members(learners)?;
    let base = learners
        .iter()
        .map(|l| l.predict_proba(ds))
        .collect::<Result<Vec<_>>>()?;
    let order: Vec<Option<usize>> = model
        .blend
        .members
        .iter()
        .map(|id| {
            if id == META_ID {
                Ok(None)
            } else {
                model
                    .members
                    .iter()
                    .position(|m| &m.id == id)
                    .map(Some)
                    .ok_or_else(|| Error::Schema(format!("blend member {id} is not a base model")))
            }
        })
        .collect::<Result<_>>()?;
    Ok((0..ds.n_rows())
        .map(|r| {
            let mut probs: Vec<f64> = base.iter().map(|c| c[r]).collect();
            let meta = model.meta.predict(&probs);
            let blended: f64 = order
                .iter()
                .zip(&model.blend.weights)
                .map(|(o, w)| w * o.map_or(meta, |i| probs[i]))
                .sum();
            let prob_attack = blended.clamp(0.0, 1.0);
            probs.push(meta);
            StackedPrediction {
                class: u8::from(prob_attack >= 0.5),
                prob_attack,
                members: probs,
            }
        })
        .collect())
}
