use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learner::{FitOptions, LearnerSpec};
use crate::metrics::MetricId;
use crate::search::{cross_validate, FoldPlan};

/// A base model to cross-fit: its name, parameter point and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseMember {
    pub id: String,
    pub spec: LearnerSpec,
    pub seed: u64,
}

/// Out-of-fold attack probabilities, one column per base model, all from
/// one fold plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OofMatrix {
    pub model_ids: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub n_rows: usize,
    pub fold_hash: String,
}

impl OofMatrix {
    pub fn column(&self, id: &str) -> Option<&[f64]> {
        self.model_ids
            .iter()
            .position(|m| m == id)
            .map(|i| self.columns[i].as_slice())
    }
}

pub fn build_oof(
    ds: &Dataset,
    members: &[BaseMember],
    folds: &FoldPlan,
    options: FitOptions,
) -> Result<OofMatrix> {
    if members.is_empty() {
        return Err(Error::InvalidParam("no base models to stack".into()));
    }
    for m in members {
        m.spec.validate()?;
    }
    let mut columns = Vec::with_capacity(members.len());
    for m in members {
        let outcome = cross_validate(ds, &m.spec, folds, MetricId::Logloss, options, m.seed)?;
        match outcome.oof {
            Some(col) => {
                if col.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::Training(format!(
                        "{}: out-of-fold probability outside [0,1]",
                        m.id
                    )));
                }
                columns.push(col);
            }
            None => {
                return Err(Error::Training(format!(
                    "{}: {}",
                    m.id,
                    outcome.trial.failed.unwrap_or_default()
                )))
            }
        }
    }
    Ok(OofMatrix {
        model_ids: members.iter().map(|m| m.id.clone()).collect(),
        columns,
        n_rows: ds.n_rows(),
        fold_hash: folds.hash(),
    })
}
