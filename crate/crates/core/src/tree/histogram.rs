use rayon::prelude::*;

use crate::features::{BinnedView, MISSING_BIN};

/// Per-row statistics accumulated into histogram bins.
#[derive(Clone, Copy)]
pub(crate) enum RowStats<'a> {
    /// One count per class.
    Classes { labels: &'a [u8], n_classes: usize },
    /// `[g, h, 1]` per row.
    Grad { grad: &'a [f64], hess: &'a [f64] },
}

impl RowStats<'_> {
    pub(crate) fn width(&self) -> usize {
        match self {
            RowStats::Classes { n_classes, .. } => *n_classes,
            RowStats::Grad { .. } => 3,
        }
    }

    /// Sums the statistics of `rows` (missing bins included).
    pub(crate) fn totals(&self, rows: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.width()];
        match self {
            RowStats::Classes { labels, .. } => {
                for &r in rows {
                    out[labels[r] as usize] += 1.0;
                }
            }
            RowStats::Grad { grad, hess } => {
                for &r in rows {
                    out[0] += grad[r];
                    out[1] += hess[r];
                    out[2] += 1.0;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub offsets: Vec<usize>,
    pub n_bins: Vec<usize>,
    pub width: usize,
    pub len: usize,
}

impl Layout {
    pub(crate) fn new(view: &BinnedView, width: usize) -> Self {
        let n_bins: Vec<usize> = (0..view.n_features()).map(|f| view.n_bins(f)).collect();
        let mut offsets = Vec::with_capacity(n_bins.len());
        let mut len = 0;
        for nb in &n_bins {
            offsets.push(len);
            len += nb * width;
        }
        Layout {
            offsets,
            n_bins,
            width,
            len,
        }
    }

    pub(crate) fn feature<'h>(&self, hist: &'h Histogram, f: usize) -> &'h [f64] {
        &hist.0[self.offsets[f]..self.offsets[f] + self.n_bins[f] * self.width]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Histogram(pub Vec<f64>);

const PARALLEL_CELLS: usize = 1 << 16;

fn fill(seg: &mut [f64], col: &[u8], rows: &[usize], stats: RowStats<'_>) {
    match stats {
        RowStats::Classes { labels, n_classes } => {
            for &r in rows {
                let b = col[r];
                if b != MISSING_BIN {
                    seg[b as usize * n_classes + labels[r] as usize] += 1.0;
                }
            }
        }
        RowStats::Grad { grad, hess } => {
            for &r in rows {
                let b = col[r];
                if b != MISSING_BIN {
                    let o = b as usize * 3;
                    seg[o] += grad[r];
                    seg[o + 1] += hess[r];
                    seg[o + 2] += 1.0;
                }
            }
        }
    }
}

/// Builds per-feature bin histograms over `rows`. Rows in the missing bin
/// are left out. Each feature is accumulated sequentially in row order, so
/// the result does not depend on the thread count.
pub(crate) fn build_histogram(
    layout: &Layout,
    view: &BinnedView,
    rows: &[usize],
    stats: RowStats<'_>,
) -> Histogram {
    let mut data = vec![0.0; layout.len];
    let mut segments = Vec::with_capacity(layout.n_bins.len());
    let mut rest = data.as_mut_slice();
    for nb in &layout.n_bins {
        let (seg, tail) = rest.split_at_mut(nb * layout.width);
        segments.push(seg);
        rest = tail;
    }
    if rows.len() * layout.n_bins.len() >= PARALLEL_CELLS {
        segments
            .into_par_iter()
            .enumerate()
            .for_each(|(f, seg)| fill(seg, &view.bins[f], rows, stats));
    } else {
        for (f, seg) in segments.into_iter().enumerate() {
            fill(seg, &view.bins[f], rows, stats);
        }
    }
    Histogram(data)
}

/// `parent − child`, the histogram of the sibling.
pub(crate) fn subtract(parent: &Histogram, child: &Histogram) -> Histogram {
    Histogram(parent.0.iter().zip(&child.0).map(|(p, c)| p - c).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn subtraction_matches_direct_build() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 5000;
        let bins: Vec<Vec<u8>> = (0..4)
            .map(|_| (0..n).map(|_| rng.gen_range(0..40)).collect())
            .collect();
        let view = BinnedView::from_bins(bins);
        let grad: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hess: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.25)).collect();
        let stats = RowStats::Grad {
            grad: &grad,
            hess: &hess,
        };
        let layout = Layout::new(&view, stats.width());
        let rows: Vec<usize> = (0..n).collect();
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| view.bins[2][r] < 17);
        let parent = build_histogram(&layout, &view, &rows, stats);
        let direct = build_histogram(&layout, &view, &right, stats);
        let derived = subtract(&parent, &build_histogram(&layout, &view, &left, stats));
        for (a, b) in direct.0.iter().zip(&derived.0) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }
}
