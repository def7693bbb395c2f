use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnData, Dataset, Vocab};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalStrategy {
    /// Keep the integer codes and treat them as ordered values.
    Passthrough,
    OneHot,
    /// Replace codes by prior-smoothed running target means computed over a
    /// random permutation, using only rows that precede each row.
    OrderedTarget,
}

/// How each categorical feature is turned into numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingPlan {
    pub strategies: BTreeMap<String, CategoricalStrategy>,
    pub one_hot_cap: usize,
    /// Prior for target statistics; `None` means the training positive rate.
    pub prior: Option<f64>,
    pub prior_weight: f64,
}

impl EncodingPlan {
    pub fn uniform(ds: &Dataset, strategy: CategoricalStrategy) -> Self {
        let strategies = ds
            .columns
            .iter()
            .filter(|c| c.data.is_categorical())
            .map(|c| (c.name.clone(), strategy))
            .collect();
        EncodingPlan {
            strategies,
            one_hot_cap: 16,
            prior: None,
            prior_weight: 1.0,
        }
    }

    pub fn passthrough(ds: &Dataset) -> Self {
        Self::uniform(ds, CategoricalStrategy::Passthrough)
    }

    pub fn ordered_target(ds: &Dataset) -> Self {
        Self::uniform(ds, CategoricalStrategy::OrderedTarget)
    }
}

/// Per-feature state needed to encode unseen rows exactly as at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum FittedFeature {
    Numeric {
        name: String,
    },
    Passthrough {
        name: String,
        vocab: Vocab,
    },
    OneHot {
        name: String,
        vocab: Vocab,
    },
    OrderedTarget {
        name: String,
        vocab: Vocab,
        /// (positive count, row count) per code over all training rows.
        stats: Vec<(f64, f64)>,
        prior: f64,
        prior_weight: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedEncoding {
    pub plan: EncodingPlan,
    pub seed: u64,
    pub features: Vec<FittedFeature>,
}

/// Output of [`build_encoding`]: the encoded training table and the state
/// to encode further tables.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub dataset: Dataset,
    pub fitted: FittedEncoding,
}

/// Running prior-smoothed target mean over `order`: each row sees only the
/// rows placed before it.
pub fn ordered_target_values(
    codes: &[u32],
    labels: &[u8],
    order: &[usize],
    prior: f64,
    prior_weight: f64,
) -> Vec<f64> {
    let n_codes = codes.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut pos = vec![0.0; n_codes];
    let mut cnt = vec![0.0; n_codes];
    let mut out = vec![0.0; codes.len()];
    for &r in order {
        let c = codes[r] as usize;
        out[r] = (pos[c] + prior_weight * prior) / (cnt[c] + prior_weight);
        pos[c] += f64::from(labels[r]);
        cnt[c] += 1.0;
    }
    out
}

fn one_hot_columns(name: &str, codes: &[u32], vocab: &Vocab) -> Vec<Column> {
    (1..vocab.len() as u32)
        .map(|k| {
            Column::numeric(
                format!("{name}={}", vocab.decode(k).unwrap_or_default()),
                codes.iter().map(|&c| f64::from(u8::from(c == k))).collect(),
            )
        })
        .collect()
}

/// Encodes the categorical columns of a training table according to `plan`.
pub fn build_encoding(ds: &Dataset, plan: &EncodingPlan, rng_seed: u64) -> Result<Encoded> {
    for c in &ds.columns {
        if c.data.is_categorical() && !plan.strategies.contains_key(&c.name) {
            return Err(Error::Encoding(format!(
                "no strategy for categorical feature `{}`",
                c.name
            )));
        }
    }
    let prior = plan.prior.unwrap_or_else(|| {
        if ds.n_rows() == 0 {
            0.5
        } else {
            ds.positives() as f64 / ds.n_rows() as f64
        }
    });
    let mut order: Vec<usize> = (0..ds.n_rows()).collect();
    order.shuffle(&mut seed::stream(rng_seed, "ordered-target-permutation"));

    let mut columns = Vec::with_capacity(ds.n_features());
    let mut fitted = Vec::with_capacity(ds.n_features());
    for col in &ds.columns {
        match &col.data {
            ColumnData::Categorical { codes, vocab } => match plan.strategies[&col.name] {
                CategoricalStrategy::Passthrough => {
                    columns.push(Column {
                        name: col.name.clone(),
                        data: ColumnData::Ordinal {
                            codes: codes.clone(),
                            vocab: vocab.clone(),
                        },
                    });
                    fitted.push(FittedFeature::Passthrough {
                        name: col.name.clone(),
                        vocab: vocab.clone(),
                    });
                }
                CategoricalStrategy::OneHot => {
                    if vocab.cardinality() > plan.one_hot_cap {
                        return Err(Error::Encoding(format!(
                            "one-hot on `{}` with {} categories exceeds cap {}",
                            col.name,
                            vocab.cardinality(),
                            plan.one_hot_cap
                        )));
                    }
                    columns.extend(one_hot_columns(&col.name, codes, vocab));
                    fitted.push(FittedFeature::OneHot {
                        name: col.name.clone(),
                        vocab: vocab.clone(),
                    });
                }
                CategoricalStrategy::OrderedTarget => {
                    let values =
                        ordered_target_values(codes, &ds.labels, &order, prior, plan.prior_weight);
                    let mut stats = vec![(0.0, 0.0); vocab.len()];
                    for (&c, &y) in codes.iter().zip(&ds.labels) {
                        stats[c as usize].0 += f64::from(y);
                        stats[c as usize].1 += 1.0;
                    }
                    columns.push(Column::numeric(col.name.clone(), values));
                    fitted.push(FittedFeature::OrderedTarget {
                        name: col.name.clone(),
                        vocab: vocab.clone(),
                        stats,
                        prior,
                        prior_weight: plan.prior_weight,
                    });
                }
            },
            _ => {
                columns.push(col.clone());
                fitted.push(FittedFeature::Numeric {
                    name: col.name.clone(),
                });
            }
        }
    }
    let mut dataset = ds.clone();
    dataset.columns = columns;
    Ok(Encoded {
        dataset,
        fitted: FittedEncoding {
            plan: plan.clone(),
            seed: rng_seed,
            features: fitted,
        },
    })
}

impl FittedEncoding {
    /// Encodes a table that was not used for fitting (validation or test rows).
    /// Target statistics use all training rows; unseen categories get the prior.
    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.n_features() != self.features.len() {
            return Err(Error::Schema(format!(
                "encoding expects {} input features, table has {}",
                self.features.len(),
                ds.n_features()
            )));
        }
        let mut columns = Vec::with_capacity(ds.n_features());
        for (col, f) in ds.columns.iter().zip(&self.features) {
            let codes_for = |name: &str, vocab: &Vocab| -> Result<&Vec<u32>> {
                if col.name != name {
                    return Err(Error::Schema(format!(
                        "expected feature `{name}`, found `{}`",
                        col.name
                    )));
                }
                match &col.data {
                    ColumnData::Categorical { codes, vocab: v }
                    | ColumnData::Ordinal { codes, vocab: v } => {
                        if v != vocab {
                            return Err(Error::Schema(format!("vocabulary mismatch on `{name}`")));
                        }
                        Ok(codes)
                    }
                    ColumnData::Numeric { .. } => {
                        Err(Error::Schema(format!("`{name}` is not categorical")))
                    }
                }
            };
            match f {
                FittedFeature::Numeric { name } => {
                    if &col.name != name || col.data.is_categorical() {
                        return Err(Error::Schema(format!(
                            "expected numeric feature `{name}`, found `{}`",
                            col.name
                        )));
                    }
                    columns.push(col.clone());
                }
                FittedFeature::Passthrough { name, vocab } => {
                    let codes = codes_for(name, vocab)?;
                    columns.push(Column {
                        name: name.clone(),
                        data: ColumnData::Ordinal {
                            codes: codes.clone(),
                            vocab: vocab.clone(),
                        },
                    });
                }
                FittedFeature::OneHot { name, vocab } => {
                    let codes = codes_for(name, vocab)?;
                    columns.extend(one_hot_columns(name, codes, vocab));
                }
                FittedFeature::OrderedTarget {
                    name,
                    vocab,
                    stats,
                    prior,
                    prior_weight,
                } => {
                    let codes = codes_for(name, vocab)?;
                    let values = codes
                        .iter()
                        .map(|&c| {
                            let (p, n) = stats.get(c as usize).copied().unwrap_or((0.0, 0.0));
                            (p + prior_weight * prior) / (n + prior_weight)
                        })
                        .collect();
                    columns.push(Column::numeric(name.clone(), values));
                }
            }
        }
        let mut out = ds.clone();
        out.columns = columns;
        Ok(out)
    }
}
