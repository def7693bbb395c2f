use serde::{Deserialize, Serialize};

use super::histogram::{build_histogram, Histogram, Layout, RowStats};
use super::impurity::gini_from_counts;
use super::params::RegularizationParams;
use crate::features::BinnedView;

/// Gains at or below this value never produce a split.
pub const MIN_SPLIT_GAIN: f64 = 1e-12;
/// Relative tolerance under which two gains count as tied; ties go to the
/// lowest feature id, then the lowest threshold.
pub const GAIN_TIE_TOLERANCE: f64 = 1e-12;

/// A split `bin(row, feature) <= threshold` goes left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: u8,
    pub gain: f64,
}

pub(crate) fn improves(gain: f64, best: Option<f64>) -> bool {
    match best {
        None => gain > MIN_SPLIT_GAIN,
        Some(b) => gain > b + GAIN_TIE_TOLERANCE * b.abs().max(1.0),
    }
}

#[derive(Clone, Copy)]
pub(crate) enum Criterion<'a> {
    Gini { reg: &'a RegularizationParams },
    Grad { reg: &'a RegularizationParams },
}

#[inline]
fn score_term(g: f64, h: f64, lambda: f64) -> f64 {
    let d = h + lambda;
    if d > 0.0 {
        g * g / d
    } else {
        0.0
    }
}

impl Criterion<'_> {
    fn reg(&self) -> &RegularizationParams {
        match self {
            Criterion::Gini { reg } | Criterion::Grad { reg } => reg,
        }
    }

    pub(crate) fn count(&self, s: &[f64]) -> f64 {
        match self {
            Criterion::Gini { .. } => s.iter().sum(),
            Criterion::Grad { .. } => s[2],
        }
    }

    /// Gain without child constraints.
    pub(crate) fn raw_gain(&self, left: &[f64], right: &[f64], parent: &[f64]) -> f64 {
        match self {
            Criterion::Gini { .. } => {
                let nl: f64 = left.iter().sum();
                let nr: f64 = right.iter().sum();
                let n = nl + nr;
                if n <= 0.0 {
                    return 0.0;
                }
                gini_from_counts(parent)
                    - nl / n * gini_from_counts(left)
                    - nr / n * gini_from_counts(right)
            }
            Criterion::Grad { reg } => {
                0.5 * (score_term(left[0], left[1], reg.lambda)
                    + score_term(right[0], right[1], reg.lambda)
                    - score_term(parent[0], parent[1], reg.lambda))
                    - reg.gamma
            }
        }
    }

    /// Gain of a split, or `None` if a child violates a constraint.
    pub(crate) fn gain(&self, left: &[f64], right: &[f64], parent: &[f64]) -> Option<f64> {
        let reg = self.reg();
        let min_rows = reg.min_data_in_leaf.max(1) as f64;
        if self.count(left) < min_rows || self.count(right) < min_rows {
            return None;
        }
        if let Criterion::Grad { reg } = self {
            if left[1] < reg.min_child_weight || right[1] < reg.min_child_weight {
                return None;
            }
        }
        Some(self.raw_gain(left, right, parent))
    }

    /// Gain scaled so that it is comparable across nodes of different sizes.
    pub(crate) fn comparable(&self, gain: f64, node_rows: f64) -> f64 {
        match self {
            Criterion::Gini { .. } => gain * node_rows,
            Criterion::Grad { .. } => gain,
        }
    }
}

fn feature_total(seg: &[f64], width: usize) -> Vec<f64> {
    let mut total = vec![0.0; width];
    for bin in seg.chunks_exact(width) {
        for (t, v) in total.iter_mut().zip(bin) {
            *t += v;
        }
    }
    total
}

/// Scans every (feature, threshold) of one node's histogram in ascending
/// order and returns the best admissible split.
pub(crate) fn best_in_histogram(
    crit: Criterion<'_>,
    layout: &Layout,
    hist: &Histogram,
    node_rows: usize,
    features: &[usize],
) -> Option<SplitCandidate> {
    if node_rows < crit.reg().min_samples_split.max(2) {
        return None;
    }
    let w = layout.width;
    let mut best: Option<SplitCandidate> = None;
    let mut left = vec![0.0; w];
    let mut right = vec![0.0; w];
    for &f in features {
        let seg = layout.feature(hist, f);
        let total = feature_total(seg, w);
        left.iter_mut().for_each(|v| *v = 0.0);
        let nb = layout.n_bins[f];
        for t in 0..nb.saturating_sub(1) {
            for (l, v) in left.iter_mut().zip(&seg[t * w..(t + 1) * w]) {
                *l += v;
            }
            for k in 0..w {
                right[k] = total[k] - left[k];
            }
            if let Some(g) = crit.gain(&left, &right, &total) {
                if improves(g, best.map(|b| b.gain)) {
                    best = Some(SplitCandidate {
                        feature: f,
                        threshold: t as u8,
                        gain: g,
                    });
                }
            }
        }
    }
    best
}

/// Best shared split for a level of a symmetric tree: maximises the sum of
/// per-node gains. Child constraints are not applied; empty children are
/// allowed so that every level stays complete.
pub(crate) fn best_symmetric(
    crit: Criterion<'_>,
    layout: &Layout,
    hists: &[&Histogram],
    features: &[usize],
) -> Option<SplitCandidate> {
    let w = layout.width;
    let mut best: Option<SplitCandidate> = None;
    let mut right = vec![0.0; w];
    for &f in features {
        let segs: Vec<&[f64]> = hists.iter().map(|h| layout.feature(h, f)).collect();
        let totals: Vec<Vec<f64>> = segs.iter().map(|s| feature_total(s, w)).collect();
        let counts: Vec<f64> = totals.iter().map(|t| crit.count(t)).collect();
        let mut lefts = vec![vec![0.0; w]; hists.len()];
        // A node's gain only moves at thresholds whose bin holds some of its rows.
        let mut gains: Vec<f64> = (0..hists.len())
            .map(|n| crit.comparable(crit.raw_gain(&lefts[n], &totals[n], &totals[n]), counts[n]))
            .collect();
        let nb = layout.n_bins[f];
        for t in 0..nb.saturating_sub(1) {
            let mut changed = false;
            for (n, seg) in segs.iter().enumerate() {
                let bin = &seg[t * w..(t + 1) * w];
                if bin.iter().all(|&v| v == 0.0) {
                    continue;
                }
                changed = true;
                for (l, v) in lefts[n].iter_mut().zip(bin) {
                    *l += v;
                }
                for k in 0..w {
                    right[k] = totals[n][k] - lefts[n][k];
                }
                gains[n] = crit.comparable(crit.raw_gain(&lefts[n], &right, &totals[n]), counts[n]);
            }
            if !changed && t > 0 {
                continue;
            }
            let sum: f64 = gains.iter().sum();
            if improves(sum, best.map(|b| b.gain)) {
                best = Some(SplitCandidate {
                    feature: f,
                    threshold: t as u8,
                    gain: sum,
                });
            }
        }
    }
    best
}

/// Best Gini split of `rows` over `candidate_features`, maximising the
/// weighted impurity decrease. `None` when no admissible split lowers the
/// impurity.
pub fn best_split_gini(
    view: &BinnedView,
    rows: &[usize],
    labels: &[u8],
    n_classes: usize,
    candidate_features: &[usize],
    reg: &RegularizationParams,
) -> Option<SplitCandidate> {
    if rows.is_empty() {
        return None;
    }
    let stats = RowStats::Classes { labels, n_classes };
    let layout = Layout::new(view, stats.width());
    let hist = build_histogram(&layout, view, rows, stats);
    best_in_histogram(
        Criterion::Gini { reg },
        &layout,
        &hist,
        rows.len(),
        &sorted(candidate_features),
    )
}

/// Best second-order split of `rows`:
/// `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ`. `None` when the best
/// gain is not positive or every split violates a child constraint.
pub fn best_split_grad(
    view: &BinnedView,
    rows: &[usize],
    grad: &[f64],
    hess: &[f64],
    reg: &RegularizationParams,
    candidate_features: &[usize],
) -> Option<SplitCandidate> {
    if rows.is_empty() {
        return None;
    }
    let stats = RowStats::Grad { grad, hess };
    let layout = Layout::new(view, stats.width());
    let hist = build_histogram(&layout, view, rows, stats);
    best_in_histogram(
        Criterion::Grad { reg },
        &layout,
        &hist,
        rows.len(),
        &sorted(candidate_features),
    )
}

fn sorted(features: &[usize]) -> Vec<usize> {
    let mut f = features.to_vec();
    f.sort_unstable();
    f.dedup();
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg0() -> RegularizationParams {
        RegularizationParams {
            lambda: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn separable_gini_split_at_five() {
        let x: Vec<u8> = (0..10).collect();
        let labels: Vec<u8> = x.iter().map(|&v| u8::from(v >= 5)).collect();
        let view = BinnedView::from_bins(vec![x]);
        let rows: Vec<usize> = (0..10).collect();
        let s = best_split_gini(&view, &rows, &labels, 2, &[0], &reg0()).unwrap();
        assert_eq!((s.feature, s.threshold), (0, 4));
        assert!((s.gain - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_labels_no_split() {
        let view = BinnedView::from_bins(vec![(0..8).collect()]);
        let rows: Vec<usize> = (0..8).collect();
        assert!(best_split_gini(&view, &rows, &[1; 8], 2, &[0], &reg0()).is_none());
    }

    #[test]
    fn four_row_gradient_gain() {
        let view = BinnedView::from_bins(vec![vec![0, 0, 1, 1]]);
        let s = best_split_grad(
            &view,
            &[0, 1, 2, 3],
            &[-1.0, -1.0, 1.0, 1.0],
            &[1.0; 4],
            &reg0(),
            &[0],
        )
        .unwrap();
        assert_eq!(s.threshold, 0);
        assert!((s.gain - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_gradients_no_split() {
        let view = BinnedView::from_bins(vec![vec![0, 1, 2, 3]]);
        assert!(
            best_split_grad(&view, &[0, 1, 2, 3], &[0.0; 4], &[1.0; 4], &reg0(), &[0]).is_none()
        );
    }

    #[test]
    fn huge_lambda_no_split() {
        let view = BinnedView::from_bins(vec![vec![0, 0, 1, 1]]);
        let reg = RegularizationParams {
            lambda: 1e300,
            gamma: 0.0,
            ..Default::default()
        };
        assert!(best_split_grad(
            &view,
            &[0, 1, 2, 3],
            &[-1.0, -1.0, 1.0, 1.0],
            &[1.0; 4],
            &reg,
            &[0]
        )
        .is_none());
    }

    #[test]
    fn child_constraints_respected() {
        let view = BinnedView::from_bins(vec![vec![0, 1, 1, 1]]);
        let g = [-3.0, 1.0, 1.0, 1.0];
        let rows = [0, 1, 2, 3];
        assert!(best_split_grad(&view, &rows, &g, &[1.0; 4], &reg0(), &[0]).is_some());
        let reg = RegularizationParams {
            min_data_in_leaf: 2,
            ..reg0()
        };
        assert!(best_split_grad(&view, &rows, &g, &[1.0; 4], &reg, &[0]).is_none());
        let reg = RegularizationParams {
            min_child_weight: 1.5,
            ..reg0()
        };
        assert!(best_split_grad(&view, &rows, &g, &[1.0; 4], &reg, &[0]).is_none());
        let reg = RegularizationParams {
            min_samples_split: 5,
            ..reg0()
        };
        assert!(best_split_grad(&view, &rows, &g, &[1.0; 4], &reg, &[0]).is_none());
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        let col = vec![0, 0, 1, 1];
        let view = BinnedView::from_bins(vec![col.clone(), col]);
        let s = best_split_grad(
            &view,
            &[0, 1, 2, 3],
            &[-1.0, -1.0, 1.0, 1.0],
            &[1.0; 4],
            &reg0(),
            &[1, 0],
        )
        .unwrap();
        assert_eq!(s.feature, 0);
    }
}
