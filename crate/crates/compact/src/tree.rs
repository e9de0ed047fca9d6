//! Weak learners: decision stumps and shallow free-label trees.
//!
//! Fitting maximizes the weighted edge `sum_i y_i w_i g(x_i)`. The sweep
//! conventions here are deliberately rigid (accumulation orders, tie-breaks,
//! midpoint fallback) so that a reimplementation following the same rules
//! reproduces results bit for bit.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Sentinel threshold for the always-fires side: every finite value compares
/// `>=` to it, so the stump is constant. Kept finite so models stay plain JSON.
pub const NEG_UNBOUNDED: f64 = -f64::MAX;

/// Axis-aligned threshold classifier: `polarity` if `x[feature] >= threshold`,
/// else `-polarity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: i8,
}

impl Stump {
    #[inline]
    pub fn apply(&self, features: &[f64]) -> i8 {
        if features[self.feature] >= self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

/// Per-feature column store with one global sort order per feature,
/// computed once and shared by every sweep.
pub struct FeatureColumns {
    n: usize,
    cols: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
}

impl FeatureColumns {
    pub fn build(dataset: &Dataset) -> FeatureColumns {
        Self::from_examples(&dataset.examples, dataset.feature_count)
    }

    pub fn from_examples(examples: &[crate::data::Example], feature_count: usize) -> FeatureColumns {
        let n = examples.len();
        let k = feature_count;
        let mut cols = vec![Vec::with_capacity(n); k];
        for ex in examples {
            for (j, v) in ex.features.iter().enumerate() {
                cols[j].push(*v);
            }
        }
        let order = cols
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                // Ties keep input order so the sweep is fully deterministic.
                idx.sort_by(|&a, &b| {
                    col[a as usize]
                        .partial_cmp(&col[b as usize])
                        .expect("finite values")
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        FeatureColumns { n, cols, order }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn feature_count(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub fn value(&self, feature: usize, example: usize) -> f64 {
        self.cols[feature][example]
    }

    pub fn sorted(&self, feature: usize) -> &[u32] {
        &self.order[feature]
    }
}

/// Midpoint between consecutive distinct values. If rounding collapses it
/// onto `a`, fall back to `b`; any threshold in `(a, b]` induces the same
/// partition under the `>=` rule.
#[inline]
fn split_point(a: f64, b: f64) -> f64 {
    let t = 0.5 * (a + b);
    if t <= a {
        b
    } else {
        t
    }
}

#[derive(Debug, Clone)]
pub struct StumpFit {
    pub stump: Stump,
    /// Weighted edge over the active examples, always nonnegative.
    pub edge: f64,
}

/// Best stump on one feature.
///
/// Sweep convention: the total `T = sum y_i w_i` accumulates in input order;
/// the below-threshold sum `B` accumulates in ascending-value order; the edge
/// of `(t, +1)` is `T - 2B`. Candidates are the constant stump (threshold
/// `NEG_UNBOUNDED`) followed by midpoints between consecutive distinct values,
/// each tried with polarity `+1` before `-1`, keeping the first strict
/// maximum. Ties therefore resolve to the lowest threshold, then polarity `+1`.
pub fn fit_stump(
    columns: &FeatureColumns,
    feature: usize,
    labels: &[f64],
    weights: &[f64],
    active: &[bool],
) -> StumpFit {
    let n = columns.len();
    debug_assert_eq!(labels.len(), n);
    debug_assert_eq!(weights.len(), n);
    debug_assert_eq!(active.len(), n);

    let mut total = 0.0;
    for i in 0..n {
        if active[i] {
            total += labels[i] * weights[i];
        }
    }

    let mut best_edge = total;
    let mut best_t = NEG_UNBOUNDED;
    let mut best_pol: i8 = 1;
    if -total > best_edge {
        best_edge = -total;
        best_pol = -1;
    }

    let order = columns.sorted(feature);
    let col = &columns.cols[feature];
    let mut below = 0.0;
    let mut prev: Option<f64> = None;
    for &iu in order {
        let i = iu as usize;
        if !active[i] {
            continue;
        }
        let v = col[i];
        if let Some(a) = prev {
            if v > a {
                let t = split_point(a, v);
                let e = total - 2.0 * below;
                if e > best_edge {
                    best_edge = e;
                    best_t = t;
                    best_pol = 1;
                }
                if -e > best_edge {
                    best_edge = -e;
                    best_t = t;
                    best_pol = -1;
                }
            }
        }
        below += labels[i] * weights[i];
        prev = Some(v);
    }

    StumpFit {
        stump: Stump {
            feature,
            threshold: best_t,
            polarity: best_pol,
        },
        edge: best_edge,
    }
}

// === trees ================================================================

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        /// Child for `x[feature] < threshold`.
        left: usize,
        /// Child for `x[feature] >= threshold`.
        right: usize,
    },
    Leaf {
        output: i8,
    },
}

/// A shallow binary tree with `±1` leaves. Node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn apply(&self, features: &[f64]) -> i8 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { output } => return *output,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if features[*feature] >= *threshold {
                        *right
                    } else {
                        *left
                    };
                }
            }
        }
    }

    /// Distinct features read anywhere in the tree, ascending.
    pub fn features_used(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidInput("tree has no nodes".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Leaf { output } => {
                    if *output != 1 && *output != -1 {
                        return Err(Error::InvalidInput(format!(
                            "tree node {i}: leaf output must be 1 or -1"
                        )));
                    }
                }
                Node::Split {
                    left,
                    right,
                    threshold,
                    ..
                } => {
                    if *left >= self.nodes.len() || *right >= self.nodes.len() {
                        return Err(Error::InvalidInput(format!(
                            "tree node {i}: child index out of range"
                        )));
                    }
                    if threshold.is_nan() {
                        return Err(Error::InvalidInput(format!(
                            "tree node {i}: threshold is NaN"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TreeFit {
    pub tree: Tree,
    /// Tree output on every example (inactive ones included).
    pub outputs: Vec<i8>,
    /// Weighted edge over the active examples.
    pub edge: f64,
}

/// Fit a greedy free-label tree of the given depth on a feature subset.
///
/// Depth 1 delegates to [`fit_stump`] per feature (keeping the first strict
/// maximum in the order given), so a one-level tree is exactly the best stump.
/// Deeper levels consider real splits only: each internal node maximizes
/// `|sum_left y w| + |sum_right y w|` over midpoints between distinct values.
/// Constant candidates are excluded there, otherwise a parity-style node
/// (where every split scores the same as doing nothing) would never split
/// even though its children become separable. Leaves output the sign of
/// their partition's weight sum, ties and empty partitions falling to the
/// parent's majority, the root tie to `+1`.
pub fn fit_tree(
    columns: &FeatureColumns,
    features: &[usize],
    depth: usize,
    labels: &[f64],
    weights: &[f64],
    active: &[bool],
) -> Result<TreeFit> {
    if depth == 0 {
        return Err(Error::InvalidInput("tree depth must be at least 1".into()));
    }
    if features.is_empty() {
        return Err(Error::InvalidInput(
            "tree fitting needs at least one candidate feature".into(),
        ));
    }
    let n = columns.len();
    if labels.len() != n || weights.len() != n || active.len() != n {
        return Err(Error::InvalidInput(
            "labels, weights, and active mask must match the dataset length".into(),
        ));
    }

    if depth == 1 {
        let mut best: Option<StumpFit> = None;
        for &f in features {
            let fit = fit_stump(columns, f, labels, weights, active);
            if best.as_ref().map_or(true, |b| fit.edge > b.edge) {
                best = Some(fit);
            }
        }
        let best = best.expect("at least one feature");
        let s = best.stump;
        let outputs: Vec<i8> = (0..n)
            .map(|i| {
                if columns.value(s.feature, i) >= s.threshold {
                    s.polarity
                } else {
                    -s.polarity
                }
            })
            .collect();
        let tree = Tree {
            nodes: vec![
                Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left: 1,
                    right: 2,
                },
                Node::Leaf {
                    output: -s.polarity,
                },
                Node::Leaf { output: s.polarity },
            ],
        };
        return Ok(TreeFit {
            tree,
            outputs,
            edge: best.edge,
        });
    }

    let members: Vec<u32> = (0..n as u32).filter(|&i| active[i as usize]).collect();
    let mut builder = Builder {
        columns,
        features,
        labels,
        weights,
        nodes: Vec::new(),
        member_mask: vec![false; n],
    };
    builder.grow(members, depth, 1);
    let tree = Tree {
        nodes: builder.nodes,
    };

    let outputs: Vec<i8> = (0..n).map(|i| apply_by_columns(&tree, columns, i)).collect();
    let mut edge = 0.0;
    for i in 0..n {
        if active[i] {
            edge += labels[i] * weights[i] * outputs[i] as f64;
        }
    }
    Ok(TreeFit {
        tree,
        outputs,
        edge,
    })
}

fn apply_by_columns(tree: &Tree, columns: &FeatureColumns, example: usize) -> i8 {
    let mut at = 0;
    loop {
        match &tree.nodes[at] {
            Node::Leaf { output } => return *output,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                at = if columns.value(*feature, example) >= *threshold {
                    *right
                } else {
                    *left
                };
            }
        }
    }
}

struct Builder<'a> {
    columns: &'a FeatureColumns,
    features: &'a [usize],
    labels: &'a [f64],
    weights: &'a [f64],
    nodes: Vec<Node>,
    member_mask: Vec<bool>,
}

impl Builder<'_> {
    /// Grow a node over `members` (input order) and return its index.
    fn grow(&mut self, members: Vec<u32>, depth_left: usize, parent_majority: i8) -> usize {
        let sum: f64 = members
            .iter()
            .map(|&i| self.labels[i as usize] * self.weights[i as usize])
            .sum();
        let majority = if members.is_empty() {
            parent_majority
        } else if sum > 0.0 {
            1
        } else if sum < 0.0 {
            -1
        } else {
            1
        };

        if depth_left == 0 || members.is_empty() {
            self.nodes.push(Node::Leaf { output: majority });
            return self.nodes.len() - 1;
        }

        let split = self.best_split(&members, sum);
        let Some((feature, threshold)) = split else {
            // No two distinct values on any candidate feature.
            self.nodes.push(Node::Leaf { output: majority });
            return self.nodes.len() - 1;
        };

        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &i in &members {
            if self.columns.value(feature, i as usize) < threshold {
                left.push(i);
            } else {
                right.push(i);
            }
        }
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { output: majority }); // placeholder
        let l = self.grow(left, depth_left - 1, majority);
        let r = self.grow(right, depth_left - 1, majority);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left: l,
            right: r,
        };
        at
    }

    /// Best real split of `members` by `|L| + |S - L|`, features in the given
    /// order, thresholds ascending, first strict maximum kept.
    fn best_split(&mut self, members: &[u32], sum: f64) -> Option<(usize, f64)> {
        for &i in members {
            self.member_mask[i as usize] = true;
        }
        let mut best: Option<(f64, usize, f64)> = None;
        for &f in self.features {
            let mut below = 0.0f64;
            let mut prev: Option<f64> = None;
            for &iu in self.columns.sorted(f) {
                let i = iu as usize;
                if !self.member_mask[i] {
                    continue;
                }
                let v = self.columns.value(f, i);
                if let Some(a) = prev {
                    if v > a {
                        let t = split_point(a, v);
                        let gain = below.abs() + (sum - below).abs();
                        if best.as_ref().map_or(true, |b| gain > b.0) {
                            best = Some((gain, f, t));
                        }
                    }
                }
                below += self.labels[i] * self.weights[i];
                prev = Some(v);
            }
        }
        for &i in members {
            self.member_mask[i as usize] = false;
        }
        best.map(|(_, f, t)| (f, t))
    }
}
