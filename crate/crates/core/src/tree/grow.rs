use std::collections::VecDeque;

use rand::seq::index::sample;

use super::histogram::{build_histogram, subtract, Histogram, Layout, RowStats};
use super::model::{DecisionTree, Node};
use super::params::{FeatureSampling, GrowthPolicy, RegularizationParams};
use super::split::{best_in_histogram, best_symmetric, Criterion, SplitCandidate};
use crate::error::{Error, Result};
use crate::features::{BinnedView, MISSING_BIN};
use crate::seed::Rng;

/// What a tree is fit to.
#[derive(Debug, Clone, Copy)]
pub enum TreeTarget<'a> {
    /// Classification by Gini impurity; leaves hold class proportions.
    Gini { labels: &'a [u8], n_classes: usize },
    /// Second-order fit to per-row gradients and hessians; leaves hold
    /// `−G/(H+λ)`.
    Gradient { grad: &'a [f64], hess: &'a [f64] },
}

impl<'a> TreeTarget<'a> {
    fn stats(&self) -> RowStats<'a> {
        match *self {
            TreeTarget::Gini { labels, n_classes } => RowStats::Classes { labels, n_classes },
            TreeTarget::Gradient { grad, hess } => RowStats::Grad { grad, hess },
        }
    }
}

/// Minimiser of `Σ g·w + ½(H+λ)w²`; 0 when the denominator vanishes.
pub fn leaf_weight(grad_sum: f64, hess_sum: f64, lambda: f64) -> f64 {
    let d = hess_sum + lambda;
    if d > 0.0 {
        -grad_sum / d
    } else {
        0.0
    }
}

struct Work {
    id: usize,
    rows: Vec<usize>,
    depth: usize,
    hist: Histogram,
}

struct Grower<'a> {
    view: &'a BinnedView,
    target: TreeTarget<'a>,
    stats: RowStats<'a>,
    reg: &'a RegularizationParams,
    layout: Layout,
    tree_features: Vec<usize>,
    per_split: f64,
    nodes: Vec<Option<Node>>,
}

impl<'a> Grower<'a> {
    fn crit(&self) -> Criterion<'a> {
        match self.target {
            TreeTarget::Gini { .. } => Criterion::Gini { reg: self.reg },
            TreeTarget::Gradient { .. } => Criterion::Grad { reg: self.reg },
        }
    }

    fn split_features(&self, rng: &mut Rng) -> Vec<usize> {
        if self.per_split >= 1.0 {
            return self.tree_features.clone();
        }
        let n = self.tree_features.len();
        let k = ((self.per_split * n as f64).ceil() as usize).clamp(1, n);
        let mut picked: Vec<usize> = sample(rng, n, k)
            .into_iter()
            .map(|i| self.tree_features[i])
            .collect();
        picked.sort_unstable();
        picked
    }

    fn alloc(&mut self) -> usize {
        self.nodes.push(None);
        self.nodes.len() - 1
    }

    fn make_leaf(&mut self, id: usize, rows: &[usize]) {
        let totals = self.stats.totals(rows);
        let node = match self.target {
            TreeTarget::Gini { .. } => {
                let n: f64 = totals.iter().sum();
                let dist: Vec<f64> = if n > 0.0 {
                    totals.iter().map(|c| c / n).collect()
                } else {
                    vec![0.0; totals.len()]
                };
                Node::Leaf {
                    id,
                    value: dist.get(1).copied().unwrap_or(0.0),
                    distribution: Some(dist),
                }
            }
            TreeTarget::Gradient { .. } => Node::Leaf {
                id,
                value: leaf_weight(totals[0], totals[1], self.reg.lambda),
                distribution: None,
            },
        };
        self.nodes[id] = Some(node);
    }

    /// Splits `work` and returns its two children with their histograms.
    fn split(&mut self, work: Work, cand: SplitCandidate) -> (Work, Work) {
        let col = &self.view.bins[cand.feature];
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut missing = Vec::new();
        for &r in &work.rows {
            match col[r] {
                MISSING_BIN => missing.push(r),
                b if b <= cand.threshold => left.push(r),
                _ => right.push(r),
            }
        }
        let default_left = left.len() >= right.len();
        if default_left {
            left.extend(missing);
        } else {
            right.extend(missing);
        }
        let lid = self.alloc();
        let rid = self.alloc();
        self.nodes[work.id] = Some(Node::Split {
            id: work.id,
            feature: cand.feature,
            threshold: cand.threshold,
            left: lid,
            right: rid,
            default_left,
        });
        let (lh, rh) = if left.is_empty() || right.is_empty() {
            let empty = Histogram(vec![0.0; self.layout.len]);
            if left.is_empty() {
                (empty, work.hist)
            } else {
                (work.hist, empty)
            }
        } else if left.len() <= right.len() {
            let small = build_histogram(&self.layout, self.view, &left, self.stats);
            let large = subtract(&work.hist, &small);
            (small, large)
        } else {
            let small = build_histogram(&self.layout, self.view, &right, self.stats);
            let large = subtract(&work.hist, &small);
            (large, small)
        };
        let depth = work.depth + 1;
        (
            Work {
                id: lid,
                rows: left,
                depth,
                hist: lh,
            },
            Work {
                id: rid,
                rows: right,
                depth,
                hist: rh,
            },
        )
    }

    fn best(&self, work: &Work, rng: &mut Rng) -> Option<SplitCandidate> {
        let features = self.split_features(rng);
        best_in_histogram(
            self.crit(),
            &self.layout,
            &work.hist,
            work.rows.len(),
            &features,
        )
    }

    fn depth_wise(&mut self, root: Work, max_depth: usize, rng: &mut Rng) {
        let mut queue = VecDeque::from([root]);
        while let Some(work) = queue.pop_front() {
            let cand = if work.depth < max_depth {
                self.best(&work, rng)
            } else {
                None
            };
            match cand {
                Some(c) => {
                    let (l, r) = self.split(work, c);
                    queue.push_back(l);
                    queue.push_back(r);
                }
                None => self.make_leaf(work.id, &work.rows),
            }
        }
    }

    fn leaf_wise(
        &mut self,
        root: Work,
        num_leaves: usize,
        max_depth: Option<usize>,
        rng: &mut Rng,
    ) {
        let crit = self.crit();
        let mut leaves: Vec<(Work, Option<SplitCandidate>)> = Vec::new();
        let cand_for = |g: &Self, w: &Work, rng: &mut Rng| {
            if max_depth.is_some_and(|d| w.depth >= d) {
                None
            } else {
                g.best(w, rng)
            }
        };
        let c = cand_for(self, &root, rng);
        leaves.push((root, c));
        let mut n_leaves = 1;
        while n_leaves < num_leaves {
            // Largest gain first; ties go to the lowest node id.
            let mut pick: Option<(usize, f64, usize)> = None;
            for (i, (w, c)) in leaves.iter().enumerate() {
                if let Some(c) = c {
                    let g = crit.comparable(c.gain, w.rows.len() as f64);
                    let better = match pick {
                        None => true,
                        Some((_, bg, bid)) => g > bg || (g == bg && w.id < bid),
                    };
                    if better {
                        pick = Some((i, g, w.id));
                    }
                }
            }
            let Some((i, _, _)) = pick else { break };
            let (work, cand) = leaves.swap_remove(i);
            let (l, r) = self.split(work, cand.expect("picked leaf has a candidate"));
            let cl = cand_for(self, &l, rng);
            let cr = cand_for(self, &r, rng);
            leaves.push((l, cl));
            leaves.push((r, cr));
            n_leaves += 1;
        }
        for (w, _) in leaves {
            self.make_leaf(w.id, &w.rows);
        }
    }

    fn symmetric(&mut self, root: Work, depth: usize, rng: &mut Rng) {
        let mut level = vec![root];
        for _ in 0..depth {
            let features = self.split_features(rng);
            let hists: Vec<&Histogram> = level.iter().map(|w| &w.hist).collect();
            let Some(cand) = best_symmetric(self.crit(), &self.layout, &hists, &features) else {
                break;
            };
            let mut next = Vec::with_capacity(level.len() * 2);
            for w in level {
                let (l, r) = self.split(w, cand);
                next.push(l);
                next.push(r);
            }
            level = next;
        }
        for w in level {
            self.make_leaf(w.id, &w.rows);
        }
    }
}

/// Grows one tree on `rows` of `view`.
///
/// Depth-wise growth expands every frontier node up to `max_depth`;
/// leaf-wise growth repeatedly splits the leaf with the largest gain until
/// `num_leaves` is reached; symmetric growth picks, per level, the single
/// split with the largest gain summed over the level's nodes. Columns are
/// sampled once per tree and again per split as set by `sampling`.
pub fn grow_tree(
    view: &BinnedView,
    rows: &[usize],
    target: TreeTarget<'_>,
    policy: GrowthPolicy,
    reg: &RegularizationParams,
    sampling: FeatureSampling,
    rng: &mut Rng,
) -> Result<DecisionTree> {
    if rows.is_empty() {
        return Err(Error::Training("cannot grow a tree on zero rows".into()));
    }
    policy.validate()?;
    reg.validate()?;
    sampling.validate()?;
    let stats = target.stats();
    let layout = Layout::new(view, stats.width());
    let d = view.n_features();
    let mut tree_features: Vec<usize> = if sampling.per_tree >= 1.0 {
        (0..d).collect()
    } else {
        let k = ((sampling.per_tree * d as f64).ceil() as usize).clamp(1, d.max(1));
        sample(rng, d, k).into_vec()
    };
    tree_features.sort_unstable();

    let mut g = Grower {
        view,
        target,
        stats,
        reg,
        layout,
        tree_features,
        per_split: sampling.per_split,
        nodes: Vec::new(),
    };
    let root_id = g.alloc();
    let root = Work {
        id: root_id,
        rows: rows.to_vec(),
        depth: 0,
        hist: build_histogram(&g.layout, view, rows, stats),
    };
    match policy {
        GrowthPolicy::DepthWise { max_depth } => g.depth_wise(root, max_depth, rng),
        GrowthPolicy::LeafWise {
            num_leaves,
            max_depth,
        } => g.leaf_wise(root, num_leaves, max_depth, rng),
        GrowthPolicy::Symmetric { depth } => g.symmetric(root, depth, rng),
    }
    let nodes = g
        .nodes
        .into_iter()
        .map(|n| n.expect("every node finalised"))
        .collect();
    Ok(DecisionTree {
        n_features: d,
        nodes,
    })
}
