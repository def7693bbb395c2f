use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-vs-rest counts for class `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ClassCounts {
    pub fn support(&self) -> u64 {
        self.tp + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub m: usize,
    pub n: u64,
    pub classes: Vec<ClassCounts>,
    /// `matrix[true][pred]`.
    pub matrix: Vec<Vec<u64>>,
}

pub fn confusion(labels: &[u8], predictions: &[u8], m: usize) -> Result<ConfusionCounts> {
    if labels.len() != predictions.len() {
        return Err(Error::Metrics(format!(
            "{} labels but {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    if m < 2 {
        return Err(Error::Metrics("need at least two classes".into()));
    }
    let mut matrix = vec![vec![0u64; m]; m];
    for (&y, &p) in labels.iter().zip(predictions) {
        let (y, p) = (usize::from(y), usize::from(p));
        if y >= m || p >= m {
            return Err(Error::Metrics(format!(
                "class id out of range 0..{m}: label {y}, prediction {p}"
            )));
        }
        matrix[y][p] += 1;
    }
    let n = labels.len() as u64;
    let classes = (0..m)
        .map(|i| {
            let tp = matrix[i][i];
            let fn_: u64 = matrix[i].iter().sum::<u64>() - tp;
            let fp: u64 = (0..m).map(|j| matrix[j][i]).sum::<u64>() - tp;
            ClassCounts {
                tp,
                tn: n - tp - fn_ - fp,
                fp,
                fn_,
            }
        })
        .collect();
    Ok(ConfusionCounts {
        m,
        n,
        classes,
        matrix,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassComponents {
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when `tp + fp = 0` and precision was taken as 0.
    pub precision_undefined: bool,
    /// Set when `tp + fn = 0` and recall was taken as 0.
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// False-positive rate of the attack class (normal traffic flagged).
    pub false_positive_rate: f64,
    pub per_class: Vec<ClassComponents>,
    pub n: u64,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Accuracy from the binary aggregate counts (attack = positive); precision,
/// recall and F1 as support-weighted means of the one-vs-rest components.
pub fn compute_metrics(cc: &ConfusionCounts) -> Result<MetricsReport> {
    if cc.n == 0 {
        return Err(Error::Metrics("no evaluated rows".into()));
    }
    let per_class: Vec<ClassComponents> = cc
        .classes
        .iter()
        .map(|c| {
            let (precision, precision_undefined) = ratio(c.tp, c.tp + c.fp);
            let (recall, recall_undefined) = ratio(c.tp, c.tp + c.fn_);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassComponents {
                support: c.support(),
                precision,
                recall,
                f1,
                precision_undefined,
                recall_undefined,
            }
        })
        .collect();
    let total: f64 = per_class.iter().map(|c| c.support as f64).sum();
    let weighted = |f: fn(&ClassComponents) -> f64| {
        per_class
            .iter()
            .map(|c| c.support as f64 * f(c))
            .sum::<f64>()
            / total
    };
    let accuracy = if cc.m == 2 {
        let pos = cc.classes[1];
        (pos.tp + pos.tn) as f64 / (pos.tp + pos.tn + pos.fp + pos.fn_) as f64
    } else {
        (0..cc.m).map(|i| cc.matrix[i][i]).sum::<u64>() as f64 / cc.n as f64
    };
    let attack = cc.classes[cc.m - 1];
    Ok(MetricsReport {
        accuracy,
        precision: weighted(|c| c.precision),
        recall: weighted(|c| c.recall),
        f1: weighted(|c| c.f1),
        false_positive_rate: ratio(attack.fp, attack.fp + attack.tn).0,
        per_class,
        n: cc.n,
    })
}

/// Selection criterion for tuning and blending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    /// Negative mean logistic loss, so larger is better like the others.
    #[default]
    Logloss,
    Accuracy,
    WeightedF1,
}

impl MetricId {
    /// Score of attack probabilities `probs` against `labels`; larger is
    /// better for every metric.
    pub fn score(self, labels: &[u8], probs: &[f64]) -> Result<f64> {
        if labels.len() != probs.len() || labels.is_empty() {
            return Err(Error::Metrics(format!(
                "{} labels, {} scores",
                labels.len(),
                probs.len()
            )));
        }
        match self {
            MetricId::Logloss => {
                let eps = 1e-15;
                let sum: f64 = labels
                    .iter()
                    .zip(probs)
                    .map(|(&y, &p)| {
                        let p = p.clamp(eps, 1.0 - eps);
                        if y == 1 {
                            -p.ln()
                        } else {
                            -(1.0 - p).ln()
                        }
                    })
                    .sum();
                Ok(-sum / labels.len() as f64)
            }
            MetricId::Accuracy | MetricId::WeightedF1 => {
                let preds: Vec<u8> = probs.iter().map(|&p| u8::from(p >= 0.5)).collect();
                let m = compute_metrics(&confusion(labels, &preds, 2)?)?;
                Ok(if self == MetricId::Accuracy {
                    m.accuracy
                } else {
                    m.f1
                })
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Logloss => "logloss",
            MetricId::Accuracy => "accuracy",
            MetricId::WeightedF1 => "weighted_f1",
        }
    }
}

impl std::str::FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logloss" => Ok(MetricId::Logloss),
            "accuracy" => Ok(MetricId::Accuracy),
            "weighted_f1" | "f1" => Ok(MetricId::WeightedF1),
            other => Err(Error::InvalidParam(format!("unknown metric {other:?}"))),
        }
    }
}
