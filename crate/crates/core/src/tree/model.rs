use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{BinnedView, MISSING_BIN};

/// One entry of a tree's node array. Node 0 is the root; children always
/// have larger ids than their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        id: usize,
        feature: usize,
        /// Rows with `bin <= threshold` go left.
        threshold: u8,
        left: usize,
        right: usize,
        /// Branch taken by rows whose bin was never seen in training.
        default_left: bool,
    },
    Leaf {
        id: usize,
        value: f64,
        /// Class proportions for classification leaves.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distribution: Option<Vec<f64>>,
    },
}

impl Node {
    pub fn id(&self) -> usize {
        match self {
            Node::Split { id, .. } | Node::Leaf { id, .. } => *id,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf(n_features: usize, value: f64) -> Self {
        DecisionTree {
            n_features,
            nodes: vec![Node::Leaf {
                id: 0,
                value,
                distribution: None,
            }],
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    pub(crate) fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.nodes.len()];
        for n in &self.nodes {
            if let Node::Split {
                id, left, right, ..
            } = n
            {
                depth[*left] = depth[*id] + 1;
                depth[*right] = depth[*id] + 1;
            }
        }
        depth
    }

    /// Leaf values in node order.
    pub fn leaf_values(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { value, .. } => Some(*value),
                Node::Split { .. } => None,
            })
            .collect()
    }

    /// Checks the structural invariants: ids match positions, children exist,
    /// every node reachable exactly once, leaves finite.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.nodes.len()];
        if !self.nodes.is_empty() {
            seen[0] = true;
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id() != i {
                return Err(Error::Schema(format!("node at {i} has id {}", n.id())));
            }
            match n {
                Node::Split {
                    left,
                    right,
                    feature,
                    ..
                } => {
                    if *feature >= self.n_features {
                        return Err(Error::Schema(format!(
                            "node {i} splits on feature {feature}"
                        )));
                    }
                    for c in [*left, *right] {
                        if c <= i || c >= self.nodes.len() || seen[c] {
                            return Err(Error::Schema(format!("node {i} has bad child {c}")));
                        }
                        seen[c] = true;
                    }
                }
                Node::Leaf { value, .. } => {
                    if !value.is_finite() {
                        return Err(Error::Schema(format!("leaf {i} is not finite")));
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Schema("unreachable node".into()));
        }
        Ok(())
    }

    #[inline]
    fn route(&self, bin_of: impl Fn(usize) -> u8) -> &Node {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    default_left,
                    ..
                } => {
                    let b = bin_of(*feature);
                    let go_left = if b == MISSING_BIN {
                        *default_left
                    } else {
                        b <= *threshold
                    };
                    i = if go_left { *left } else { *right };
                }
                leaf => return leaf,
            }
        }
    }

    /// Leaf id reached by row `row` of `view`.
    #[inline]
    pub fn leaf_index(&self, view: &BinnedView, row: usize) -> usize {
        self.route(|f| view.bins[f][row]).id()
    }

    /// Leaf value for row `row` of a binned table.
    #[inline]
    pub fn predict_binned(&self, view: &BinnedView, row: usize) -> f64 {
        match self.route(|f| view.bins[f][row]) {
            Node::Leaf { value, .. } => *value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn distribution_binned(&self, view: &BinnedView, row: usize) -> Option<&[f64]> {
        match self.route(|f| view.bins[f][row]) {
            Node::Leaf { distribution, .. } => distribution.as_deref(),
            Node::Split { .. } => unreachable!(),
        }
    }
}

/// Routes one binned row to its leaf value.
pub fn predict_tree(tree: &DecisionTree, row: &[u8]) -> Result<f64> {
    if row.len() != tree.n_features {
        return Err(Error::Schema(format!(
            "row has {} features, tree expects {}",
            row.len(),
            tree.n_features
        )));
    }
    match tree.route(|f| row[f]) {
        Node::Leaf { value, .. } => Ok(*value),
        Node::Split { .. } => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// root: f0 <= 2 ? (f1 <= 0 ? -1 : 1) : 5, unseen bins go right at root.
    fn three_split_tree() -> DecisionTree {
        DecisionTree {
            n_features: 2,
            nodes: vec![
                Node::Split {
                    id: 0,
                    feature: 0,
                    threshold: 2,
                    left: 1,
                    right: 2,
                    default_left: false,
                },
                Node::Split {
                    id: 1,
                    feature: 1,
                    threshold: 0,
                    left: 3,
                    right: 4,
                    default_left: true,
                },
                Node::Leaf {
                    id: 2,
                    value: 5.0,
                    distribution: None,
                },
                Node::Leaf {
                    id: 3,
                    value: -1.0,
                    distribution: None,
                },
                Node::Leaf {
                    id: 4,
                    value: 1.0,
                    distribution: None,
                },
            ],
        }
    }

    #[test]
    fn single_leaf_everywhere() {
        let t = DecisionTree::leaf(3, 0.25);
        assert_eq!(predict_tree(&t, &[0, 9, MISSING_BIN]).unwrap(), 0.25);
        assert_eq!(predict_tree(&t, &[200, 1, 2]).unwrap(), 0.25);
    }

    #[test]
    fn hand_trace() {
        let t = three_split_tree();
        t.validate().unwrap();
        assert_eq!(predict_tree(&t, &[0, 0]).unwrap(), -1.0);
        assert_eq!(predict_tree(&t, &[2, 3]).unwrap(), 1.0);
        assert_eq!(predict_tree(&t, &[3, 0]).unwrap(), 5.0);
        assert_eq!(t.depth(), 2);
        assert_eq!(t.n_leaves(), 3);
    }

    #[test]
    fn unknown_bin_takes_default() {
        let t = three_split_tree();
        assert_eq!(predict_tree(&t, &[MISSING_BIN, 0]).unwrap(), 5.0);
        assert_eq!(predict_tree(&t, &[1, MISSING_BIN]).unwrap(), -1.0);
    }

    #[test]
    fn schema_mismatch() {
        assert!(predict_tree(&three_split_tree(), &[1]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let t = three_split_tree();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"type\":\"split\""));
        let back: DecisionTree = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
