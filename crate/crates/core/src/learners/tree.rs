//! Binary threshold trees and the two growers built on them: a weighted
//! Gini classifier (CART) and a second-order regression tree for boosting.
//!
//! A tree is a flat node array. Node 0 is the root and every child index is
//! larger than its parent's, so a tree never contains a cycle. A split sends
//! `x[feature] <= threshold` to `left`.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::N_FEATURES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict(&self, x: &[f64; N_FEATURES]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut max = 0;
        for (i, node) in self.nodes.iter().enumerate() {
            if let Node::Split { left, right, .. } = *node {
                depth[left] = depth[i] + 1;
                depth[right] = depth[i] + 1;
                max = max.max(depth[i] + 1);
            }
        }
        max
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Structural checks: feature bounds, finite thresholds, forward-only
    /// child links with every non-root node referenced exactly once, and
    /// leaf values inside `leaf_range` when given.
    pub fn validate(&self, leaf_range: Option<(f64, f64)>) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        let mut parents = vec![0usize; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= N_FEATURES {
                        return Err(format!("nodes[{i}].feature {feature} out of range 0..{N_FEATURES}"));
                    }
                    if !threshold.is_finite() {
                        return Err(format!("nodes[{i}].threshold is not finite"));
                    }
                    for (name, child) in [("left", left), ("right", right)] {
                        if child <= i || child >= self.nodes.len() {
                            return Err(format!("nodes[{i}].{name} {child} is not a later node"));
                        }
                        parents[child] += 1;
                    }
                }
                Node::Leaf { value } => {
                    if !value.is_finite() {
                        return Err(format!("nodes[{i}].value is not finite"));
                    }
                    if let Some((lo, hi)) = leaf_range {
                        if value < lo || value > hi {
                            return Err(format!("nodes[{i}].value {value} outside [{lo}, {hi}]"));
                        }
                    }
                }
            }
        }
        if let Some(orphan) = (1..self.nodes.len()).find(|&i| parents[i] != 1) {
            return Err(format!("nodes[{orphan}] has {} parents", parents[orphan]));
        }
        Ok(())
    }
}

/// `a` beats `best` by more than rounding noise.
fn improves(score: f64, best: Option<f64>) -> bool {
    match best {
        None => true,
        Some(b) => score > b + b.abs() * 1e-14,
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let t = a / 2.0 + b / 2.0;
    if t >= b {
        a
    } else {
        t
    }
}

fn sorted_by_feature(x: &[[f64; N_FEATURES]], rows: &[usize], feature: usize) -> Vec<usize> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
    sorted
}

fn is_constant(x: &[[f64; N_FEATURES]], rows: &[usize], feature: usize) -> bool {
    let first = x[rows[0]][feature];
    rows.iter().all(|&r| x[r][feature] == first)
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

fn partition(x: &[[f64; N_FEATURES]], rows: &[usize], split: &Split) -> (Vec<usize>, Vec<usize>) {
    rows.iter()
        .partition(|&&r| x[r][split.feature] <= split.threshold)
}

/// Builder state shared by both growers: the node arena and a work stack.
struct Arena {
    nodes: Vec<Node>,
    stack: Vec<(usize, Vec<usize>, usize)>,
}

impl Arena {
    fn new(root_rows: Vec<usize>) -> Self {
        Self {
            nodes: vec![Node::Leaf { value: 0.0 }],
            stack: vec![(0, root_rows, 0)],
        }
    }

    fn split(&mut self, at: usize, split: &Split, left_rows: Vec<usize>, right_rows: Vec<usize>, depth: usize) {
        let left = self.nodes.len();
        let right = left + 1;
        self.nodes.push(Node::Leaf { value: 0.0 });
        self.nodes.push(Node::Leaf { value: 0.0 });
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        // right first so the left subtree is expanded first
        self.stack.push((right, right_rows, depth + 1));
        self.stack.push((left, left_rows, depth + 1));
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CartParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per split. Values >= 3 examine all of them.
    pub max_features: usize,
}

/// Grows a Gini classification tree. `weight[i]` is the multiplicity of row
/// `i` (bootstrap counts; 0 leaves the row out). Leaves hold the weighted
/// fraction of `High` rows.
///
/// Among equally good splits the lowest feature index, then the lowest
/// threshold, wins. With `max_features < 3` each node draws its candidate
/// features from `rng`, skipping features that are constant on the node.
pub(crate) fn grow_classifier(
    x: &[[f64; N_FEATURES]],
    high: &[bool],
    weight: &[f64],
    params: &CartParams,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let rows: Vec<usize> = (0..x.len()).filter(|&i| weight[i] > 0.0).collect();
    let mut arena = Arena::new(rows);
    while let Some((at, rows, depth)) = arena.stack.pop() {
        let total: f64 = rows.iter().map(|&r| weight[r]).sum();
        let pos: f64 = rows.iter().filter(|&&r| high[r]).map(|&r| weight[r]).sum();
        let leaf_value = pos / total;
        let stop = pos == 0.0
            || pos == total
            || rows.len() < params.min_samples_split
            || params.max_depth.is_some_and(|d| depth >= d);
        let best = if stop {
            None
        } else {
            best_gini_split(x, high, weight, &rows, params.max_features, rng)
        };
        match best {
            Some(split) => {
                let (l, r) = partition(x, &rows, &split);
                arena.split(at, &split, l, r, depth);
            }
            None => arena.nodes[at] = Node::Leaf { value: leaf_value },
        }
    }
    Tree { nodes: arena.nodes }
}

fn candidate_features(
    x: &[[f64; N_FEATURES]],
    rows: &[usize],
    max_features: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    if max_features >= N_FEATURES {
        return (0..N_FEATURES).filter(|&f| !is_constant(x, rows, f)).collect();
    }
    let mut order: Vec<usize> = (0..N_FEATURES).collect();
    order.shuffle(rng);
    let mut picked: Vec<usize> = order
        .into_iter()
        .filter(|&f| !is_constant(x, rows, f))
        .take(max_features)
        .collect();
    picked.sort_unstable();
    picked
}

fn best_gini_split(
    x: &[[f64; N_FEATURES]],
    high: &[bool],
    weight: &[f64],
    rows: &[usize],
    max_features: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Split> {
    let total: f64 = rows.iter().map(|&r| weight[r]).sum();
    let pos: f64 = rows.iter().filter(|&&r| high[r]).map(|&r| weight[r]).sum();
    let mut best: Option<Split> = None;
    for feature in candidate_features(x, rows, max_features, rng) {
        let sorted = sorted_by_feature(x, rows, feature);
        let (mut wl, mut pl) = (0.0, 0.0);
        for k in 0..sorted.len() - 1 {
            let r = sorted[k];
            wl += weight[r];
            if high[r] {
                pl += weight[r];
            }
            let (a, b) = (x[r][feature], x[sorted[k + 1]][feature]);
            if a == b {
                continue;
            }
            let (wr, pr) = (total - wl, pos - pl);
            // maximizing sum_child sum_class w_c^2 / w_child minimizes weighted Gini
            let score = (pl * pl + (wl - pl) * (wl - pl)) / wl + (pr * pr + (wr - pr) * (wr - pr)) / wr;
            if improves(score, best.as_ref().map(|s| s.score)) {
                best = Some(Split {
                    feature,
                    threshold: midpoint(a, b),
                    score,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonParams {
    pub max_depth: usize,
    pub lambda: f64,
    pub min_child_weight: f64,
    /// Multiplies every leaf weight.
    pub shrinkage: f64,
}

/// Grows a depth-limited regression tree on per-row gradients and hessians.
/// Splits maximize G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ) and require a
/// positive gain; leaves hold `shrinkage · −G/(H+λ)`.
pub(crate) fn grow_newton(x: &[[f64; N_FEATURES]], grad: &[f64], hess: &[f64], params: &NewtonParams) -> Tree {
    let mut arena = Arena::new((0..x.len()).collect());
    while let Some((at, rows, depth)) = arena.stack.pop() {
        let g: f64 = rows.iter().map(|&r| grad[r]).sum();
        let h: f64 = rows.iter().map(|&r| hess[r]).sum();
        let best = if depth < params.max_depth && rows.len() >= 2 {
            best_newton_split(x, grad, hess, &rows, g, h, params)
        } else {
            None
        };
        match best {
            Some(split) => {
                let (l, r) = partition(x, &rows, &split);
                arena.split(at, &split, l, r, depth);
            }
            None => {
                arena.nodes[at] = Node::Leaf {
                    value: params.shrinkage * -g / (h + params.lambda),
                }
            }
        }
    }
    Tree { nodes: arena.nodes }
}

fn best_newton_split(
    x: &[[f64; N_FEATURES]],
    grad: &[f64],
    hess: &[f64],
    rows: &[usize],
    g: f64,
    h: f64,
    params: &NewtonParams,
) -> Option<Split> {
    let lambda = params.lambda;
    let parent = g * g / (h + lambda);
    let mut best: Option<Split> = None;
    for feature in 0..N_FEATURES {
        let sorted = sorted_by_feature(x, rows, feature);
        let (mut gl, mut hl) = (0.0, 0.0);
        for k in 0..sorted.len() - 1 {
            let r = sorted[k];
            gl += grad[r];
            hl += hess[r];
            let (a, b) = (x[r][feature], x[sorted[k + 1]][feature]);
            if a == b {
                continue;
            }
            let (gr, hr) = (g - gl, h - hl);
            if hl < params.min_child_weight || hr < params.min_child_weight {
                continue;
            }
            let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
            if gain > 1e-12 && improves(gain, best.as_ref().map(|s| s.score)) {
                best = Some(Split {
                    feature,
                    threshold: midpoint(a, b),
                    score: gain,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    fn all_features() -> CartParams {
        CartParams {
            max_depth: None,
            min_samples_split: 2,
            max_features: 3,
        }
    }

    #[test]
    fn separable_column_gives_one_split() {
        let x: Vec<[f64; 3]> = [0.0, 1.0, 2.0, 3.0, 10.0, 11.0, 12.0, 13.0]
            .iter()
            .map(|&s| [-100.0, -12.0, s])
            .collect();
        let high: Vec<bool> = x.iter().map(|r| r[2] >= 10.0).collect();
        let tree = grow_classifier(&x, &high, &[1.0; 8], &all_features(), &mut rng());
        assert_eq!(tree.nodes.len(), 3);
        match tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 2);
                assert_eq!(threshold, 6.5);
            }
            _ => panic!("root should split"),
        }
        tree.validate(Some((0.0, 1.0))).unwrap();
    }

    #[test]
    fn equal_splits_prefer_lowest_feature_then_threshold() {
        // rsrp and snr separate equally well; rsrp (index 0) must win
        let x = vec![[-110.0, -12.0, 0.0], [-109.0, -12.0, 1.0], [-90.0, -12.0, 10.0], [-89.0, -12.0, 11.0]];
        let high = vec![false, false, true, true];
        let tree = grow_classifier(&x, &high, &[1.0; 4], &all_features(), &mut rng());
        assert!(matches!(tree.nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn zero_weight_rows_are_ignored() {
        let x = vec![[-110.0, -12.0, 0.0], [-90.0, -12.0, 10.0], [-80.0, -12.0, 20.0]];
        let high = vec![false, true, false];
        let tree = grow_classifier(&x, &high, &[1.0, 2.0, 0.0], &all_features(), &mut rng());
        assert_eq!(tree.predict(&x[2]), 1.0);
    }

    #[test]
    fn midpoint_never_reaches_upper_value() {
        let a = 1.0;
        let b = a + f64::EPSILON;
        assert_eq!(midpoint(a, b), a);
        assert_eq!(midpoint(2.0, 4.0), 3.0);
    }

    #[test]
    fn validation_catches_corruption() {
        let good = Tree {
            nodes: vec![
                Node::Split { feature: 2, threshold: 1.0, left: 1, right: 2 },
                Node::Leaf { value: 0.0 },
                Node::Leaf { value: 1.0 },
            ],
        };
        good.validate(Some((0.0, 1.0))).unwrap();
        let mut bad = good.clone();
        bad.nodes[0] = Node::Split { feature: 5, threshold: 1.0, left: 1, right: 2 };
        assert!(bad.validate(None).unwrap_err().contains("feature 5"));
        let mut cyclic = good.clone();
        cyclic.nodes[0] = Node::Split { feature: 0, threshold: 1.0, left: 0, right: 2 };
        assert!(cyclic.validate(None).is_err());
        let mut shared = good.clone();
        shared.nodes[0] = Node::Split { feature: 0, threshold: 1.0, left: 1, right: 1 };
        assert!(shared.validate(None).is_err());
        let mut out_of_range = good;
        out_of_range.nodes[2] = Node::Leaf { value: 1.5 };
        assert!(out_of_range.validate(Some((0.0, 1.0))).is_err());
    }

    #[test]
    fn newton_tree_respects_depth_and_child_weight() {
        let x: Vec<[f64; 3]> = (0..16).map(|i| [-100.0, -12.0, f64::from(i)]).collect();
        let grad: Vec<f64> = (0..16).map(|i| if i < 8 { 0.5 } else { -0.5 }).collect();
        let hess = vec![0.25; 16];
        let params = NewtonParams {
            max_depth: 3,
            lambda: 1.0,
            min_child_weight: 1.0,
            shrinkage: 1.0,
        };
        let tree = grow_newton(&x, &grad, &hess, &params);
        assert!(tree.depth() <= 3);
        // left half: G = 4, H = 2 -> -4 / 3
        assert!((tree.predict(&x[0]) + 4.0 / 3.0).abs() < 1e-12);
        assert!((tree.predict(&x[15]) - 4.0 / 3.0).abs() < 1e-12);
        let strict = NewtonParams { min_child_weight: 3.0, ..params };
        assert_eq!(grow_newton(&x, &grad, &hess, &strict).nodes.len(), 1);
    }
}
