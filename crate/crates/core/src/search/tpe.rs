use std::io::Write;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::space::{Domain, HyperparamSpace, ParamPoint};
use crate::error::{Error, Result};
use crate::seed;

pub const CANDIDATES_PER_PROPOSAL: usize = 64;
const MIN_BANDWIDTH: f64 = 1e-3;
const MAX_BANDWIDTH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub id: usize,
    pub params: ParamPoint,
    /// Larger is better; logloss enters negated.
    pub fold_metrics: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed: Option<String>,
}

impl Trial {
    pub fn from_folds(id: usize, params: ParamPoint, fold_metrics: Vec<f64>, seconds: f64) -> Self {
        let (mean, std) = mean_std(&fold_metrics);
        Trial {
            id,
            params,
            fold_metrics,
            mean,
            std,
            seconds,
            failed: None,
        }
    }

    pub fn failed(id: usize, params: ParamPoint, reason: String, seconds: f64) -> Self {
        Trial {
            id,
            params,
            fold_metrics: Vec::new(),
            mean: f64::NAN,
            std: f64::NAN,
            seconds,
            failed: Some(reason),
        }
    }

    pub fn ok(&self) -> bool {
        self.failed.is_none() && self.mean.is_finite()
    }
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Best trial: highest mean, then lowest std, then earliest.
pub fn select_best(trials: &[Trial]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, t) in trials.iter().enumerate().filter(|(_, t)| t.ok()) {
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &trials[b];
                if t.mean > cur.mean || (t.mean == cur.mean && t.std < cur.std) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunerConfig {
    pub budget: usize,
    /// Random trials before the surrogate takes over; `None` means
    /// `max(5, budget/5)`.
    pub n_initial: Option<usize>,
    pub candidates: usize,
    pub seed: u64,
}

impl TunerConfig {
    pub fn new(budget: usize, seed: u64) -> Self {
        TunerConfig {
            budget,
            n_initial: None,
            candidates: CANDIDATES_PER_PROPOSAL,
            seed,
        }
    }

    /// Pure random search with the same budget.
    pub fn random(budget: usize, seed: u64) -> Self {
        TunerConfig {
            n_initial: Some(budget),
            ..Self::new(budget, seed)
        }
    }

    fn initial(&self) -> usize {
        self.n_initial
            .unwrap_or_else(|| (self.budget / 5).max(5))
            .min(self.budget)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub best: usize,
    pub trials: Vec<Trial>,
}

impl TuneOutcome {
    pub fn best_trial(&self) -> &Trial {
        &self.trials[self.best]
    }
}

/// Weighted Parzen estimate over one numeric coordinate in unit space,
/// mixed with a uniform prior of weight `1/(m+1)`.
struct Parzen {
    centers: Vec<f64>,
    bandwidth: f64,
    /// Normalised to sum to `m/(m+1)`; the prior holds the rest.
    weights: Vec<f64>,
}

/// Scott's rule over every completed trial, so the good and bad densities
/// share one smoothing scale.
fn shared_bandwidth(all: &[f64]) -> f64 {
    let (_, sd) = mean_std(all);
    let n = all.len().max(1) as f64;
    let sd = if sd.is_finite() { sd } else { MAX_BANDWIDTH };
    (1.06 * sd * n.powf(-0.2)).clamp(MIN_BANDWIDTH, MAX_BANDWIDTH)
}

impl Parzen {
    fn new(centers: Vec<f64>, weights: Vec<f64>, bandwidth: f64) -> Self {
        let m = centers.len();
        let total: f64 = weights.iter().sum();
        let share = m as f64 / (m as f64 + 1.0);
        let weights = weights.iter().map(|w| share * w / total).collect();
        Parzen {
            centers,
            bandwidth,
            weights,
        }
    }

    fn density(&self, u: f64) -> f64 {
        let root = (2.0 * std::f64::consts::PI).sqrt();
        let kernel: f64 = self
            .centers
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| {
                let z = (u - c) / self.bandwidth;
                w * (-0.5 * z * z).exp() / (self.bandwidth * root)
            })
            .sum();
        kernel + 1.0 / (self.centers.len() as f64 + 1.0)
    }

    fn sample(&self, rng: &mut seed::Rng) -> f64 {
        let mut t = rng.gen::<f64>();
        for (i, w) in self.weights.iter().enumerate() {
            if t < *w {
                // Box-Muller.
                let (a, b): (f64, f64) = (rng.gen::<f64>().max(f64::MIN_POSITIVE), rng.gen());
                let z = (-2.0 * a.ln()).sqrt() * (2.0 * std::f64::consts::PI * b).cos();
                return (self.centers[i] + self.bandwidth * z).clamp(0.0, 1.0);
            }
            t -= w;
        }
        rng.gen::<f64>()
    }
}

fn choice_probs(choices: &[Value], observed: &[&Value]) -> Vec<f64> {
    let k = choices.len() as f64;
    let n = observed.len() as f64;
    choices
        .iter()
        .map(|c| (observed.iter().filter(|v| **v == c).count() as f64 + 1.0) / (n + k))
        .collect()
}

fn propose(
    space: &HyperparamSpace,
    trials: &[Trial],
    candidates: usize,
    rng: &mut seed::Rng,
) -> ParamPoint {
    let mut done: Vec<&Trial> = trials.iter().filter(|t| t.ok()).collect();
    if done.len() < 2 {
        return space.sample(rng);
    }
    done.sort_by(|a, b| b.mean.total_cmp(&a.mean).then(a.id.cmp(&b.id)));
    let n_good = (done.len() / 2).max(1);
    let (good, bad) = done.split_at(n_good);

    // Independent per-parameter densities, candidates drawn from the good one.
    let mut batch: Vec<ParamPoint> = vec![ParamPoint::new(); candidates];
    let mut score = vec![0.0; candidates];
    for (name, domain) in &space.params {
        match domain {
            Domain::Fixed { value } => batch.iter_mut().for_each(|p| {
                p.insert(name.clone(), value.clone());
            }),
            Domain::Choice { choices } => {
                let l = choice_probs(
                    choices,
                    &good.iter().map(|t| &t.params[name]).collect::<Vec<_>>(),
                );
                let g = choice_probs(
                    choices,
                    &bad.iter().map(|t| &t.params[name]).collect::<Vec<_>>(),
                );
                for (p, s) in batch.iter_mut().zip(score.iter_mut()) {
                    let mut u = rng.gen::<f64>();
                    let mut i = 0;
                    while i + 1 < l.len() && u >= l[i] {
                        u -= l[i];
                        i += 1;
                    }
                    *s += l[i].ln() - g[i].ln();
                    p.insert(name.clone(), choices[i].clone());
                }
            }
            Domain::Float { .. } | Domain::Int { .. } => {
                let unit = |ts: &[&Trial]| -> Vec<f64> {
                    ts.iter()
                        .filter_map(|t| domain.to_unit(&t.params[name]))
                        .collect()
                };
                let h = shared_bandwidth(&unit(&done));
                let l = Parzen::new(unit(good), vec![1.0; good.len()], h);
                let g = Parzen::new(unit(bad), vec![1.0; bad.len()], h);
                for (p, s) in batch.iter_mut().zip(score.iter_mut()) {
                    let v = domain.from_unit(l.sample(rng));
                    let u = domain.to_unit(&v).unwrap_or(0.5);
                    *s += l.density(u).ln() - g.density(u).ln();
                    p.insert(name.clone(), v);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..candidates {
        if score[i] > score[best] {
            best = i;
        }
    }
    batch.swap_remove(best)
}

/// Sequential model-based search. `objective` returns the per-fold metric
/// of a point (larger is better); an error marks the trial failed and the
/// search continues.
pub fn tune_with<F>(
    space: &HyperparamSpace,
    config: TunerConfig,
    mut objective: F,
    mut log: Option<&mut dyn Write>,
) -> Result<TuneOutcome>
where
    F: FnMut(&ParamPoint) -> Result<Vec<f64>>,
{
    if config.budget == 0 {
        return Err(Error::InvalidParam("tuning budget must be >= 1".into()));
    }
    if config.candidates == 0 {
        return Err(Error::InvalidParam("candidate batch must be >= 1".into()));
    }
    space.validate()?;
    let mut rng = seed::stream(config.seed, "tuner");
    let n_init = config.initial();
    let mut trials: Vec<Trial> = Vec::with_capacity(config.budget);
    for id in 0..config.budget {
        let point = if id < n_init {
            space.sample(&mut rng)
        } else {
            propose(space, &trials, config.candidates, &mut rng)
        };
        debug_assert!(space.contains(&point));
        let start = Instant::now();
        let trial = match objective(&point) {
            Ok(folds) if !folds.is_empty() && folds.iter().all(|m| m.is_finite()) => {
                Trial::from_folds(id, point, folds, start.elapsed().as_secs_f64())
            }
            Ok(_) => Trial::failed(
                id,
                point,
                "objective returned no finite metrics".into(),
                start.elapsed().as_secs_f64(),
            ),
            Err(e) => Trial::failed(id, point, e.to_string(), start.elapsed().as_secs_f64()),
        };
        if let Some(w) = log.as_deref_mut() {
            let line = serde_json::to_string(&trial)?;
            writeln!(w, "{line}").map_err(|e| Error::io("<trial log>", e))?;
        }
        log::info!("trial {id}: mean {:.6} std {:.6}", trial.mean, trial.std);
        trials.push(trial);
    }
    let best =
        select_best(&trials).ok_or_else(|| Error::Training("every tuning trial failed".into()))?;
    Ok(TuneOutcome { best, trials })
}
