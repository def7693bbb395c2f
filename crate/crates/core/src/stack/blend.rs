use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricId;

/// Selection-frequency weights over candidate models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleBlend {
    pub members: Vec<String>,
    pub weights: Vec<f64>,
    pub counts: Vec<usize>,
    pub metric: MetricId,
    /// Blended out-of-fold metric.
    pub value: f64,
    /// Metric after each selection, starting with the initial single model.
    pub trace: Vec<f64>,
}

impl EnsembleBlend {
    pub fn weight_of(&self, id: &str) -> f64 {
        self.members
            .iter()
            .position(|m| m == id)
            .map_or(0.0, |i| self.weights[i])
    }

    /// Weighted mean of member probabilities, given in member order.
    pub fn combine(&self, probs: &[f64]) -> f64 {
        self.weights.iter().zip(probs).map(|(w, p)| w * p).sum()
    }
}

fn blended(sum: &[f64], total: usize) -> Vec<f64> {
    let t = total as f64;
    sum.iter().map(|s| s / t).collect()
}

/// Greedy forward selection with replacement. Starts from the best single
/// candidate and keeps adding whichever candidate most improves the blended
/// metric, stopping when nothing strictly improves or after `max_iters`
/// additions. Ties go to the earlier candidate.
pub fn greedy_blend(
    ids: &[String],
    columns: &[Vec<f64>],
    labels: &[u8],
    metric: MetricId,
    max_iters: usize,
) -> Result<EnsembleBlend> {
    if ids.is_empty() || ids.len() != columns.len() {
        return Err(Error::InvalidParam(format!(
            "blend needs matching ids and columns, got {} and {}",
            ids.len(),
            columns.len()
        )));
    }
    if let Some(c) = columns.iter().find(|c| c.len() != labels.len()) {
        return Err(Error::Schema(format!(
            "blend column has {} rows, labels {}",
            c.len(),
            labels.len()
        )));
    }
    let k = ids.len();
    let singles = columns
        .iter()
        .map(|c| metric.score(labels, c))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (j, &v) in singles.iter().enumerate() {
        if v > singles[best] {
            best = j;
        }
    }
    let mut counts = vec![0usize; k];
    counts[best] = 1;
    let mut sum = columns[best].clone();
    let mut total = 1;
    let mut value = singles[best];
    let mut trace = vec![value];
    for _ in 0..max_iters {
        let mut pick: Option<(usize, f64)> = None;
        for (j, col) in columns.iter().enumerate() {
            let trial: Vec<f64> = sum
                .iter()
                .zip(col)
                .map(|(s, c)| (s + c) / (total + 1) as f64)
                .collect();
            let v = metric.score(labels, &trial)?;
            if v > pick.map_or(value, |(_, b)| b) {
                pick = Some((j, v));
            }
        }
        let Some((j, v)) = pick else { break };
        counts[j] += 1;
        total += 1;
        for (s, c) in sum.iter_mut().zip(&columns[j]) {
            *s += c;
        }
        value = v;
        trace.push(v);
    }
    debug_assert_eq!(
        metric.score(labels, &blended(&sum, total)).ok(),
        Some(value)
    );
    Ok(EnsembleBlend {
        members: ids.to_vec(),
        weights: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        counts,
        metric,
        value,
        trace,
    })
}
