use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::loss::{logloss_grad_hess, mean_logloss, GradHess};
use super::model::{BoostedModel, RoundLog, BOOSTED_MODEL_TYPE};
use super::params::BoostParams;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::features::BinnedView;
use crate::seed;
use crate::tree::{grow_tree, leaf_weight, DecisionTree, Node, TreeTarget};

const RATE_CLAMP: f64 = 1e-6;

/// An evaluation set for early stopping, binned with the training mapper.
#[derive(Debug, Clone, Copy)]
pub struct Holdout<'a> {
    pub view: &'a BinnedView,
    pub labels: &'a [u8],
}

fn log_odds(labels: &[u8], rows: &[usize]) -> f64 {
    let pos = rows.iter().filter(|&&r| labels[r] == 1).count() as f64;
    let p = (pos / rows.len().max(1) as f64).clamp(RATE_CLAMP, 1.0 - RATE_CLAMP);
    (p / (1.0 - p)).ln()
}

/// Splits `rows` into (train, held out) keeping class proportions.
fn stratified_carve(
    labels: &[u8],
    rows: &[usize],
    fraction: f64,
    rng: &mut seed::Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut held = Vec::new();
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = rows
            .iter()
            .copied()
            .filter(|&r| labels[r] == class)
            .collect();
        idx.shuffle(rng);
        let k = (fraction * idx.len() as f64).ceil() as usize;
        held.extend_from_slice(&idx[..k.min(idx.len())]);
        train.extend_from_slice(&idx[k.min(idx.len())..]);
    }
    train.sort_unstable();
    held.sort_unstable();
    (train, held)
}

fn add_tree(scores: &mut [f64], tree: &DecisionTree, view: &BinnedView, eta: f64) {
    scores
        .par_iter_mut()
        .enumerate()
        .for_each(|(r, s)| *s += eta * tree.predict_binned(view, r));
}

/// Replaces every leaf value of `tree` by the penalised Newton step over
/// `rows` under `(g, h)`.
fn refit_leaves(
    tree: &mut DecisionTree,
    view: &BinnedView,
    rows: &[usize],
    gh: &GradHess,
    lambda: f64,
) {
    let mut g = vec![0.0; tree.nodes.len()];
    let mut h = vec![0.0; tree.nodes.len()];
    for &r in rows {
        let leaf = tree.leaf_index(view, r);
        g[leaf] += gh.g[r];
        h[leaf] += gh.h[r];
    }
    for node in &mut tree.nodes {
        if let Node::Leaf { id, value, .. } = node {
            *value = leaf_weight(g[*id], h[*id], lambda);
        }
    }
}

/// Two auxiliary boosted models, each grown only on its own half of the
/// training rows. A row's structure gradients come from the model that never
/// saw it.
struct OrderedState {
    folds: [Vec<usize>; 2],
    fold_of: Vec<u8>,
    scores: [Vec<f64>; 2],
}

impl OrderedState {
    fn new(labels: &[u8], train_rows: &[usize], n: usize, seed: u64) -> Option<Self> {
        if train_rows.len() < 2 {
            return None;
        }
        let mut perm = train_rows.to_vec();
        perm.shuffle(&mut seed::stream(seed, "ordered-folds"));
        let half = perm.len() / 2;
        let mut a = perm[..half].to_vec();
        let mut b = perm[half..].to_vec();
        a.sort_unstable();
        b.sort_unstable();
        let mut fold_of = vec![u8::MAX; n];
        for &r in &b {
            fold_of[r] = 1;
        }
        for &r in &a {
            fold_of[r] = 0;
        }
        let scores = [vec![log_odds(labels, &a); n], vec![log_odds(labels, &b); n]];
        Some(OrderedState {
            folds: [a, b],
            fold_of,
            scores,
        })
    }

    /// Gradients for every row, each taken from the other fold's model.
    fn honest(&self, labels: &[u8]) -> GradHess {
        let raw: Vec<f64> = (0..labels.len())
            .map(|r| match self.fold_of[r] {
                0 => self.scores[1][r],
                1 => self.scores[0][r],
                _ => 0.0,
            })
            .collect();
        logloss_grad_hess(labels, &raw)
    }

    fn advance(
        &mut self,
        view: &BinnedView,
        labels: &[u8],
        params: &BoostParams,
        seed: u64,
        round: usize,
    ) -> Result<()> {
        let reg = params.tree_reg();
        for k in 0..2 {
            let gh = logloss_grad_hess(labels, &self.scores[k]);
            let purpose = if k == 0 {
                "ordered-aux-0"
            } else {
                "ordered-aux-1"
            };
            let mut rng = seed::indexed_stream(seed, purpose, round as u64);
            let tree = grow_tree(
                view,
                &self.folds[k],
                TreeTarget::Gradient {
                    grad: &gh.g,
                    hess: &gh.h,
                },
                params.growth,
                &reg,
                params.sampling(),
                &mut rng,
            )?;
            add_tree(&mut self.scores[k], &tree, view, params.learning_rate);
        }
        Ok(())
    }
}

/// Cross-fitted structure gradients for the first `rounds` rounds of an
/// ordered run over all rows of `view`.
pub fn ordered_fold_gradients(
    view: &BinnedView,
    labels: &[u8],
    params: &BoostParams,
    seed: u64,
    rounds: usize,
) -> Result<Vec<GradHess>> {
    let rows: Vec<usize> = (0..view.n_rows).collect();
    let mut state = OrderedState::new(labels, &rows, view.n_rows, seed)
        .ok_or_else(|| Error::Training("ordered boosting needs at least two rows".into()))?;
    let mut out = Vec::with_capacity(rounds);
    for round in 0..rounds {
        out.push(state.honest(labels));
        state.advance(view, labels, params, seed, round)?;
    }
    Ok(out)
}

/// Fits an additive logistic model one tree per round.
///
/// Without an explicit `valid` set and with early stopping enabled, a
/// stratified share of the training rows is held out; the model is cut back
/// to the round with the lowest holdout loss once `early_stopping_patience`
/// rounds pass without improvement.
pub fn train_boosted(
    ds: &Dataset,
    view: &BinnedView,
    params: &BoostParams,
    valid: Option<Holdout<'_>>,
    seed: u64,
) -> Result<BoostedModel> {
    params.validate()?;
    let labels = &ds.labels;
    let n = view.n_rows;
    if labels.len() != n {
        return Err(Error::Schema(format!(
            "binned view has {n} rows, dataset {}",
            labels.len()
        )));
    }
    if n == 0 {
        return Err(Error::Training("cannot boost on zero rows".into()));
    }
    if let Some(h) = valid {
        if h.view.n_features() != view.n_features() || h.labels.len() != h.view.n_rows {
            return Err(Error::Schema(
                "holdout does not match the training schema".into(),
            ));
        }
    }

    let all: Vec<usize> = (0..n).collect();
    let early = params.early_stopping_patience > 0;
    let (train_rows, inner_valid) = if valid.is_none() && early && params.validation_fraction > 0.0
    {
        let (t, v) = stratified_carve(
            labels,
            &all,
            params.validation_fraction,
            &mut seed::stream(seed, "early-stopping-holdout"),
        );
        if t.is_empty() || v.is_empty() {
            (all, Vec::new())
        } else {
            (t, v)
        }
    } else {
        (all, Vec::new())
    };

    let base = params
        .base_score
        .unwrap_or_else(|| log_odds(labels, &train_rows));
    let eta = params.learning_rate;
    let reg = params.tree_reg();
    let mut scores = vec![base; n];
    let mut valid_scores = valid.map(|h| vec![base; h.view.n_rows]);
    let mut ordered = if params.ordered {
        OrderedState::new(labels, &train_rows, n, seed)
    } else {
        None
    };
    let train_labels: Vec<u8> = train_rows.iter().map(|&r| labels[r]).collect();
    let inner_labels: Vec<u8> = inner_valid.iter().map(|&r| labels[r]).collect();

    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut history = Vec::with_capacity(params.n_rounds);
    let mut best = (f64::INFINITY, 0usize);
    for round in 0..params.n_rounds {
        let rows = if params.subsample < 1.0 {
            let m = train_rows.len();
            let k = ((params.subsample * m as f64).ceil() as usize).clamp(1, m);
            let mut picked: Vec<usize> = sample(
                &mut seed::indexed_stream(seed, "boost-rows", round as u64),
                m,
                k,
            )
            .into_iter()
            .map(|i| train_rows[i])
            .collect();
            picked.sort_unstable();
            picked
        } else {
            train_rows.clone()
        };

        let gh = logloss_grad_hess(labels, &scores);
        let mut rng = seed::indexed_stream(seed, "boost-tree", round as u64);
        let tree = match &mut ordered {
            Some(state) => {
                let honest = state.honest(labels);
                let mut tree = grow_tree(
                    view,
                    &rows,
                    TreeTarget::Gradient {
                        grad: &honest.g,
                        hess: &honest.h,
                    },
                    params.growth,
                    &reg,
                    params.sampling(),
                    &mut rng,
                )?;
                refit_leaves(&mut tree, view, &rows, &gh, reg.lambda);
                state.advance(view, labels, params, seed, round)?;
                tree
            }
            None => grow_tree(
                view,
                &rows,
                TreeTarget::Gradient {
                    grad: &gh.g,
                    hess: &gh.h,
                },
                params.growth,
                &reg,
                params.sampling(),
                &mut rng,
            )?,
        };
        add_tree(&mut scores, &tree, view, eta);

        let train_raw: Vec<f64> = train_rows.iter().map(|&r| scores[r]).collect();
        let train_loss = mean_logloss(&train_labels, &train_raw);
        if !train_loss.is_finite() {
            return Err(Error::NonFiniteLoss { round });
        }
        let valid_loss = match (valid, valid_scores.as_mut()) {
            (Some(h), Some(vs)) => {
                add_tree(vs, &tree, h.view, eta);
                Some(mean_logloss(h.labels, vs))
            }
            _ if !inner_valid.is_empty() => {
                let raw: Vec<f64> = inner_valid.iter().map(|&r| scores[r]).collect();
                Some(mean_logloss(&inner_labels, &raw))
            }
            _ => None,
        };
        trees.push(tree);
        history.push(RoundLog {
            round,
            train_loss,
            valid_loss,
        });
        if let Some(v) = valid_loss {
            if !v.is_finite() {
                return Err(Error::NonFiniteLoss { round });
            }
            if v < best.0 {
                best = (v, round + 1);
            } else if early && round + 1 - best.1 >= params.early_stopping_patience {
                log::debug!("early stop at round {round}, best {}", best.1);
                break;
            }
        }
    }
    let best_rounds = if early && best.1 > 0 {
        best.1
    } else {
        trees.len()
    };
    trees.truncate(best_rounds);

    Ok(BoostedModel {
        model_type: BOOSTED_MODEL_TYPE.into(),
        profile: params.profile,
        params: params.clone(),
        seed,
        base_score: base,
        eta,
        n_features: view.n_features(),
        best_rounds,
        history,
        trees,
    })
}
