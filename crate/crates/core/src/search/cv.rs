use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::FoldPlan;
use super::space::{apply_point, HyperparamSpace, ParamPoint};
use super::tpe::{tune_with, Trial, TuneOutcome, TunerConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learner::{fit_learner, FitOptions, LearnerSpec};
use crate::metrics::MetricId;
use crate::seed;

/// Which rows each fold model saw; `overlap` counts scored rows that were
/// also training rows and is zero by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub train_rows: usize,
    pub valid_rows: usize,
    pub overlap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub trial: Trial,
    /// Out-of-fold attack probabilities; `None` when the trial failed.
    pub oof: Option<Vec<f64>>,
    pub records: Vec<FoldRecord>,
}

/// Trains on k−1 folds and scores the held-out fold, k times. Every row's
/// out-of-fold probability comes from the one model that never saw it.
pub fn cross_validate(
    ds: &Dataset,
    spec: &LearnerSpec,
    folds: &FoldPlan,
    metric: MetricId,
    options: FitOptions,
    seed: u64,
) -> Result<CvOutcome> {
    if folds.n_rows() != ds.n_rows() {
        return Err(Error::Schema(format!(
            "fold plan covers {} rows, dataset has {}",
            folds.n_rows(),
            ds.n_rows()
        )));
    }
    let start = Instant::now();
    let results: Vec<Result<(Vec<usize>, Vec<f64>, FoldRecord)>> = (0..folds.k)
        .into_par_iter()
        .map(|f| {
            let train = folds.train_rows(f);
            let valid = folds.valid_rows(f);
            let mut in_train = vec![false; ds.n_rows()];
            for &r in &train {
                in_train[r] = true;
            }
            let record = FoldRecord {
                fold: f,
                train_rows: train.len(),
                valid_rows: valid.len(),
                overlap: valid.iter().filter(|&&r| in_train[r]).count(),
            };
            let model = fit_learner(
                spec,
                &ds.select(&train),
                None,
                options,
                seed::derive_index(seed, f as u64),
            )?;
            let probs = model.predict_proba(&ds.select(&valid))?;
            Ok((valid, probs, record))
        })
        .collect();

    let mut oof = vec![f64::NAN; ds.n_rows()];
    let mut fold_metrics = Vec::with_capacity(folds.k);
    let mut records = Vec::with_capacity(folds.k);
    let mut failure = None;
    for r in results {
        match r {
            Ok((valid, probs, record)) => {
                let labels: Vec<u8> = valid.iter().map(|&i| ds.labels[i]).collect();
                fold_metrics.push(metric.score(&labels, &probs)?);
                for (i, p) in valid.into_iter().zip(probs) {
                    oof[i] = p;
                }
                records.push(record);
            }
            Err(e) => {
                failure.get_or_insert(e.to_string());
            }
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    let params = spec_point(spec)?;
    Ok(match failure {
        Some(reason) => CvOutcome {
            trial: Trial::failed(0, params, reason, seconds),
            oof: None,
            records,
        },
        None => CvOutcome {
            trial: Trial::from_folds(0, params, fold_metrics, seconds),
            oof: Some(oof),
            records,
        },
    })
}

/// The learner's parameters as a flat point, for logging.
fn spec_point(spec: &LearnerSpec) -> Result<ParamPoint> {
    let v = serde_json::to_value(spec)?;
    Ok(v.get("params")
        .and_then(|p| p.as_object())
        .map(|o| o.iter().map(|(k, v)| (k.clone(), v.clone())).collect())
        .unwrap_or_default())
}

/// Tunes `base` over `space` by cross-validated `metric`.
#[allow(clippy::too_many_arguments)]
pub fn tune(
    ds: &Dataset,
    base: &LearnerSpec,
    space: &HyperparamSpace,
    budget: usize,
    folds: &FoldPlan,
    metric: MetricId,
    options: FitOptions,
    seed: u64,
    log: Option<&mut dyn Write>,
) -> Result<TuneOutcome> {
    let mut trial_index = 0u64;
    tune_with(
        space,
        TunerConfig::new(budget, seed),
        |point| {
            let spec = apply_point(base, point)?;
            let cv = cross_validate(
                ds,
                &spec,
                folds,
                metric,
                options,
                seed::derive_index(seed, trial_index),
            )?;
            trial_index += 1;
            match cv.trial.failed {
                Some(reason) => Err(Error::Training(reason)),
                None => Ok(cv.trial.fold_metrics),
            }
        },
        log,
    )
}
