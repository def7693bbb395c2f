use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnData, Dataset};
use crate::error::{Error, Result};

/// Bin index reserved for values with no training bin (unseen categories,
/// NaN). Rows in this bin follow a split's default branch.
pub const MISSING_BIN: u8 = u8::MAX;
pub const DEFAULT_MAX_BINS: usize = 255;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureBins {
    /// `bin(x)` = number of edges strictly below `x`.
    Numeric { edges: Vec<f64> },
    /// Codes seen in training, ascending; bin = position in this list.
    Categorical { codes: Vec<u32> },
}

impl FeatureBins {
    pub fn n_bins(&self) -> usize {
        match self {
            FeatureBins::Numeric { edges } => edges.len() + 1,
            FeatureBins::Categorical { codes } => codes.len().max(1),
        }
    }

    pub fn bin_value(&self, x: f64) -> u8 {
        match self {
            FeatureBins::Numeric { edges } => {
                if x.is_nan() {
                    MISSING_BIN
                } else {
                    edges.partition_point(|&e| e < x) as u8
                }
            }
            FeatureBins::Categorical { .. } => MISSING_BIN,
        }
    }

    pub fn bin_code(&self, code: u32) -> u8 {
        match self {
            FeatureBins::Categorical { codes } => {
                codes.binary_search(&code).map_or(MISSING_BIN, |b| b as u8)
            }
            FeatureBins::Numeric { .. } => self.bin_value(f64::from(code)),
        }
    }
}

/// Training-time bin boundaries for every feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMapper {
    pub names: Vec<String>,
    pub features: Vec<FeatureBins>,
    pub max_bins: usize,
}

/// Feature-major matrix of bin indices plus the mapper that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedView {
    pub mapper: BinMapper,
    pub bins: Vec<Vec<u8>>,
    pub n_rows: usize,
}

impl BinnedView {
    pub fn n_features(&self) -> usize {
        self.bins.len()
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.mapper.features[feature].n_bins()
    }

    #[inline]
    pub fn bin(&self, row: usize, feature: usize) -> u8 {
        self.bins[feature][row]
    }

    pub fn row(&self, row: usize) -> Vec<u8> {
        self.bins.iter().map(|c| c[row]).collect()
    }

    /// Builds a view directly from bin indices (tests and synthetic inputs).
    pub fn from_bins(bins: Vec<Vec<u8>>) -> Self {
        let n_rows = bins.first().map_or(0, Vec::len);
        let features = bins
            .iter()
            .map(|col| {
                let max = col
                    .iter()
                    .copied()
                    .filter(|&b| b != MISSING_BIN)
                    .max()
                    .unwrap_or(0);
                FeatureBins::Numeric {
                    edges: (0..max).map(|e| f64::from(e) + 0.5).collect(),
                }
            })
            .collect();
        BinnedView {
            mapper: BinMapper {
                names: (0..bins.len()).map(|i| format!("f{i}")).collect(),
                features,
                max_bins: DEFAULT_MAX_BINS,
            },
            bins,
            n_rows,
        }
    }
}

/// Equal-population cut points over sorted distinct values. Each cut sits at
/// the midpoint between neighbouring distinct values.
fn quantile_edges(values: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for v in sorted {
        match distinct.last_mut() {
            Some((last, n)) if *last == v => *n += 1,
            _ => distinct.push((v, 1)),
        }
    }
    let midpoint = |i: usize| distinct[i].0 + (distinct[i + 1].0 - distinct[i].0) / 2.0;
    if distinct.len() <= max_bins {
        return (0..distinct.len().saturating_sub(1))
            .map(midpoint)
            .collect();
    }
    let mut edges = Vec::with_capacity(max_bins - 1);
    let mut remaining = values.len() as f64;
    let mut bins_left = max_bins;
    let mut acc = 0usize;
    for i in 0..distinct.len() - 1 {
        if bins_left <= 1 {
            break;
        }
        acc += distinct[i].1;
        let target = remaining / bins_left as f64;
        let here = (acc as f64 - target).abs();
        let next = ((acc + distinct[i + 1].1) as f64 - target).abs();
        // Never leave fewer distinct values than bins still to fill.
        let must_cut = distinct.len() - 1 - i <= bins_left - 1;
        if acc as f64 >= target || here <= next || must_cut {
            edges.push(midpoint(i));
            remaining -= acc as f64;
            bins_left -= 1;
            acc = 0;
        }
    }
    edges
}

fn check_max_bins(max_bins: usize) -> Result<()> {
    if !(2..=DEFAULT_MAX_BINS).contains(&max_bins) {
        return Err(Error::InvalidParam(format!(
            "max_bins must be in 2..=255, got {max_bins}"
        )));
    }
    Ok(())
}

/// Learns bin boundaries on a training table and bins it.
pub fn build_bins(ds: &Dataset, max_bins: usize) -> Result<BinnedView> {
    check_max_bins(max_bins)?;
    let features: Vec<FeatureBins> = ds
        .columns
        .par_iter()
        .map(|col| match &col.data {
            ColumnData::Numeric { values } => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Encoding(format!(
                        "non-finite training value in `{}`",
                        col.name
                    )));
                }
                Ok(FeatureBins::Numeric {
                    edges: quantile_edges(values, max_bins),
                })
            }
            ColumnData::Categorical { codes, .. } | ColumnData::Ordinal { codes, .. } => {
                let mut seen = codes.clone();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() > max_bins {
                    return Err(Error::Encoding(format!(
                        "`{}` has {} categories, more than max_bins {max_bins}",
                        col.name,
                        seen.len()
                    )));
                }
                Ok(FeatureBins::Categorical { codes: seen })
            }
        })
        .collect::<Result<_>>()?;
    let mapper = BinMapper {
        names: ds.columns.iter().map(|c| c.name.clone()).collect(),
        features,
        max_bins,
    };
    mapper.apply(ds)
}

impl BinMapper {
    /// Bins a table with boundaries learned elsewhere.
    pub fn apply(&self, ds: &Dataset) -> Result<BinnedView> {
        if ds.n_features() != self.features.len() {
            return Err(Error::Schema(format!(
                "bin mapper expects {} features, table has {}",
                self.features.len(),
                ds.n_features()
            )));
        }
        for (c, name) in ds.columns.iter().zip(&self.names) {
            if &c.name != name {
                return Err(Error::Schema(format!(
                    "expected feature `{name}`, found `{}`",
                    c.name
                )));
            }
        }
        let bins = ds
            .columns
            .par_iter()
            .zip(self.features.par_iter())
            .map(|(col, fb)| match &col.data {
                ColumnData::Numeric { values } => values.iter().map(|&v| fb.bin_value(v)).collect(),
                ColumnData::Categorical { codes, .. } | ColumnData::Ordinal { codes, .. } => {
                    codes.iter().map(|&c| fb.bin_code(c)).collect()
                }
            })
            .collect();
        Ok(BinnedView {
            mapper: self.clone(),
            bins,
            n_rows: ds.n_rows(),
        })
    }
}
