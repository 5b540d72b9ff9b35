//! CART-style trees: greedy recursive partitioning with candidate thresholds
//! at midpoints between consecutive distinct sorted values. Classification
//! trees maximize weighted Gini decrease; regression trees (used by the
//! booster) maximize variance decrease. Ties break toward the lower feature
//! index, then the smaller threshold.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::NumericTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        /// Per-sample impurity decrease achieved by this split.
        impurity_decrease: f64,
        n_samples: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        /// Class distribution at the leaf; sums to 1.
        distribution: Vec<f64>,
        n_samples: usize,
    },
}

impl TreeNode {
    pub fn predict(&self, table: &NumericTable, row: usize) -> usize {
        match self {
            TreeNode::Leaf { distribution, .. } => argmax_distribution(distribution),
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                if table.value(row, *feature) <= *threshold {
                    left.predict(table, row)
                } else {
                    right.predict(table, row)
                }
            }
        }
    }

    /// Sum of `n_samples * impurity_decrease` per feature over all splits.
    pub fn raw_importances(&self, n_features: usize) -> Vec<f64> {
        let mut acc = vec![0.0f64; n_features];
        self.accumulate_importance(&mut acc);
        acc
    }

    fn accumulate_importance(&self, acc: &mut [f64]) {
        if let TreeNode::Split {
            feature,
            impurity_decrease,
            n_samples,
            left,
            right,
            ..
        } = self
        {
            acc[*feature] += *n_samples as f64 * *impurity_decrease;
            left.accumulate_importance(acc);
            right.accumulate_importance(acc);
        }
    }

    pub fn n_splits(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.n_splits() + right.n_splits(),
        }
    }
}

fn argmax_distribution(distribution: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in distribution.iter().enumerate().skip(1) {
        if p > distribution[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Number of features considered per split; all when `None`.
    pub feature_subsample: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            feature_subsample: None,
        }
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

/// Candidate features for one split, ascending so equal-gain ties resolve to
/// the lower index regardless of sampling order.
fn candidate_features(p: usize, params: &TreeParams, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match params.feature_subsample {
        Some(k) if k < p => {
            let mut picked: Vec<usize> = sample(rng, p, k).iter().collect();
            picked.sort_unstable();
            picked
        }
        _ => (0..p).collect(),
    }
}

fn gini(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let f = c as f64 / n;
            f * f
        })
        .sum::<f64>()
}

/// Fit a classification tree on the given rows of a complete table.
pub fn fit_tree(
    table: &NumericTable,
    labels: &[usize],
    n_classes: usize,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> Result<TreeNode> {
    if table.n_rows() == 0 {
        return Err(Error::Fit("cannot fit a tree on zero rows".into()));
    }
    if labels.len() != table.n_rows() {
        return Err(Error::Fit(format!(
            "{} labels for {} rows",
            labels.len(),
            table.n_rows()
        )));
    }
    let rows: Vec<u32> = (0..table.n_rows() as u32).collect();
    Ok(grow_classification(table, labels, n_classes, &rows, 0, params, rng))
}

/// Fit on an explicit row multiset (bootstrap samples repeat rows).
pub(crate) fn fit_tree_on_rows(
    table: &NumericTable,
    labels: &[usize],
    n_classes: usize,
    rows: &[u32],
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> TreeNode {
    grow_classification(table, labels, n_classes, rows, 0, params, rng)
}

fn grow_classification(
    table: &NumericTable,
    labels: &[usize],
    n_classes: usize,
    rows: &[u32],
    depth: usize,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> TreeNode {
    let n = rows.len();
    let mut counts = vec![0usize; n_classes];
    for &r in rows {
        counts[labels[r as usize]] += 1;
    }
    let leaf = |counts: &[usize]| TreeNode::Leaf {
        distribution: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        n_samples: n,
    };

    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
    if pure || depth_capped || n < 2 * params.min_samples_leaf {
        return leaf(&counts);
    }

    let parent_gini = gini(&counts, n);
    let features = candidate_features(table.n_features(), params, rng);
    let mut best: Option<BestSplit> = None;
    let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(n);

    for &f in &features {
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (table.value(r as usize, f), labels[r as usize])));
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite cells"));

        let mut left_counts = vec![0usize; n_classes];
        for i in 0..n - 1 {
            left_counts[pairs[i].1] += 1;
            if pairs[i + 1].0 <= pairs[i].0 {
                continue;
            }
            let left_n = i + 1;
            let right_n = n - left_n;
            if left_n < params.min_samples_leaf || right_n < params.min_samples_leaf {
                continue;
            }
            let mut right_counts = counts.clone();
            for (rc, lc) in right_counts.iter_mut().zip(&left_counts) {
                *rc -= lc;
            }
            let weighted = (left_n as f64 * gini(&left_counts, left_n)
                + right_n as f64 * gini(&right_counts, right_n))
                / n as f64;
            let decrease = parent_gini - weighted;
            if decrease > best.as_ref().map_or(0.0, |b| b.decrease) {
                best = Some(BestSplit {
                    feature: f,
                    threshold: 0.5 * (pairs[i].0 + pairs[i + 1].0),
                    decrease,
                });
            }
        }
    }

    let Some(split) = best else {
        return leaf(&counts);
    };

    let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows
        .iter()
        .partition(|&&r| table.value(r as usize, split.feature) <= split.threshold);
    let left = grow_classification(table, labels, n_classes, &left_rows, depth + 1, params, rng);
    let right = grow_classification(table, labels, n_classes, &right_rows, depth + 1, params, rng);
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        impurity_decrease: split.decrease,
        n_samples: n,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Regression tree node for the booster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegressionNode {
    Split {
        feature: usize,
        threshold: f64,
        impurity_decrease: f64,
        n_samples: usize,
        left: Box<RegressionNode>,
        right: Box<RegressionNode>,
    },
    Leaf {
        value: f64,
        n_samples: usize,
    },
}

impl RegressionNode {
    pub fn predict(&self, table: &NumericTable, row: usize) -> f64 {
        match self {
            RegressionNode::Leaf { value, .. } => *value,
            RegressionNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                if table.value(row, *feature) <= *threshold {
                    left.predict(table, row)
                } else {
                    right.predict(table, row)
                }
            }
        }
    }

    pub fn raw_importances(&self, n_features: usize) -> Vec<f64> {
        let mut acc = vec![0.0f64; n_features];
        self.accumulate_importance(&mut acc);
        acc
    }

    fn accumulate_importance(&self, acc: &mut [f64]) {
        if let RegressionNode::Split {
            feature,
            impurity_decrease,
            n_samples,
            left,
            right,
            ..
        } = self
        {
            acc[*feature] += *n_samples as f64 * *impurity_decrease;
            left.accumulate_importance(acc);
            right.accumulate_importance(acc);
        }
    }
}

/// Fit a regression tree on `targets`, with leaf values supplied by
/// `leaf_value` over the rows that land in each leaf (the booster uses a
/// Newton step there; plain mean regression would pass the row mean).
pub(crate) fn fit_regression_tree(
    table: &NumericTable,
    targets: &[f64],
    rows: &[u32],
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
    leaf_value: &dyn Fn(&[u32]) -> f64,
) -> RegressionNode {
    grow_regression(table, targets, rows, 0, params, rng, leaf_value)
}

fn sse(sum: f64, sum_sq: f64, n: usize) -> f64 {
    sum_sq - sum * sum / n as f64
}

#[allow(clippy::too_many_arguments)]
fn grow_regression(
    table: &NumericTable,
    targets: &[f64],
    rows: &[u32],
    depth: usize,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
    leaf_value: &dyn Fn(&[u32]) -> f64,
) -> RegressionNode {
    let n = rows.len();
    let leaf = || RegressionNode::Leaf {
        value: leaf_value(rows),
        n_samples: n,
    };

    let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
    if depth_capped || n < 2 * params.min_samples_leaf {
        return leaf();
    }
    let sum: f64 = rows.iter().map(|&r| targets[r as usize]).sum();
    let sum_sq: f64 = rows
        .iter()
        .map(|&r| targets[r as usize] * targets[r as usize])
        .sum();
    let parent_sse = sse(sum, sum_sq, n);
    if parent_sse <= 0.0 {
        return leaf();
    }

    let features = candidate_features(table.n_features(), params, rng);
    let mut best: Option<BestSplit> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);

    for &f in &features {
        pairs.clear();
        pairs.extend(
            rows.iter()
                .map(|&r| (table.value(r as usize, f), targets[r as usize])),
        );
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite cells"));

        let mut left_sum = 0.0f64;
        let mut left_sum_sq = 0.0f64;
        for i in 0..n - 1 {
            left_sum += pairs[i].1;
            left_sum_sq += pairs[i].1 * pairs[i].1;
            if pairs[i + 1].0 <= pairs[i].0 {
                continue;
            }
            let left_n = i + 1;
            let right_n = n - left_n;
            if left_n < params.min_samples_leaf || right_n < params.min_samples_leaf {
                continue;
            }
            let left_sse = sse(left_sum, left_sum_sq, left_n).max(0.0);
            let right_sse = sse(sum - left_sum, sum_sq - left_sum_sq, right_n).max(0.0);
            // Per-sample variance decrease, mirroring the gini convention.
            let decrease = (parent_sse - left_sse - right_sse) / n as f64;
            if decrease > best.as_ref().map_or(0.0, |b| b.decrease) {
                best = Some(BestSplit {
                    feature: f,
                    threshold: 0.5 * (pairs[i].0 + pairs[i + 1].0),
                    decrease,
                });
            }
        }
    }

    let Some(split) = best else {
        return leaf();
    };
    let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows
        .iter()
        .partition(|&&r| table.value(r as usize, split.feature) <= split.threshold);
    let left = grow_regression(table, targets, &left_rows, depth + 1, params, rng, leaf_value);
    let right = grow_regression(table, targets, &right_rows, depth + 1, params, rng, leaf_value);
    RegressionNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        impurity_decrease: split.decrease,
        n_samples: n,
        left: Box::new(left),
        right: Box::new(right),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn rng() -> ChaCha8Rng {
        seed::rng(0, &[99])
    }

    #[test]
    fn separable_1d_data_gets_one_split() {
        let table = NumericTable::from_columns(vec![vec![-2.0, -1.0, -0.5, 0.5, 1.0, 2.0]]).unwrap();
        let labels = vec![0, 0, 0, 1, 1, 1];
        let tree = fit_tree(&table, &labels, 2, &TreeParams::default(), &mut rng()).unwrap();
        assert_eq!(tree.n_splits(), 1);
        let correct = (0..6).filter(|&i| tree.predict(&table, i) == labels[i]).count();
        assert_eq!(correct, 6);
        if let TreeNode::Split { threshold, .. } = &tree {
            assert_eq!(*threshold, 0.0);
        }
    }

    #[test]
    fn pure_labels_give_a_single_leaf() {
        let table = NumericTable::from_columns(vec![vec![1.0, 2.0, 3.0]]).unwrap();
        let tree = fit_tree(&table, &[1, 1, 1], 2, &TreeParams::default(), &mut rng()).unwrap();
        assert!(matches!(tree, TreeNode::Leaf { .. }));
        assert_eq!(tree.n_splits(), 0);
    }

    #[test]
    fn identical_features_tie_break_to_lower_index() {
        let col = vec![-1.0, -2.0, 1.0, 2.0];
        let table = NumericTable::from_columns(vec![col.clone(), col]).unwrap();
        let tree = fit_tree(&table, &[0, 0, 1, 1], 2, &TreeParams::default(), &mut rng()).unwrap();
        match tree {
            TreeNode::Split { feature, .. } => assert_eq!(feature, 0),
            TreeNode::Leaf { .. } => panic!("expected a split"),
        }
    }

    #[test]
    fn min_samples_leaf_blocks_unbalanced_splits() {
        let table = NumericTable::from_columns(vec![vec![0.0, 1.0, 2.0, 3.0]]).unwrap();
        let labels = vec![0, 1, 0, 1];
        // Unrestricted, the tree separates the alternating labels.
        let tree = fit_tree(&table, &labels, 2, &TreeParams::default(), &mut rng()).unwrap();
        assert!(tree.n_splits() > 0);
        // With a leaf minimum of 2 the only admissible split (2|2) has zero
        // gini decrease, so the node stays a leaf.
        let params = TreeParams {
            min_samples_leaf: 2,
            ..Default::default()
        };
        let tree = fit_tree(&table, &labels, 2, &params, &mut rng()).unwrap();
        assert_eq!(tree.n_splits(), 0);
    }

    #[test]
    fn max_depth_zero_is_a_leaf() {
        let table = NumericTable::from_columns(vec![vec![0.0, 1.0]]).unwrap();
        let params = TreeParams {
            max_depth: Some(0),
            ..Default::default()
        };
        let tree = fit_tree(&table, &[0, 1], 2, &params, &mut rng()).unwrap();
        assert!(matches!(tree, TreeNode::Leaf { .. }));
    }

    #[test]
    fn importances_attribute_the_single_split() {
        let table = NumericTable::from_columns(vec![
            vec![5.0; 6],
            vec![1.0; 6],
            vec![-2.0, -1.0, -0.5, 0.5, 1.0, 2.0],
        ])
        .unwrap();
        let tree = fit_tree(&table, &[0, 0, 0, 1, 1, 1], 2, &TreeParams::default(), &mut rng())
            .unwrap();
        let imp = tree.raw_importances(3);
        assert_eq!(imp[0], 0.0);
        assert_eq!(imp[1], 0.0);
        assert!(imp[2] > 0.0);
    }

    #[test]
    fn impurity_decreases_are_nonnegative_and_gini_bounded() {
        let table = NumericTable::from_columns(vec![
            vec![0.3, 1.2, -0.5, 2.0, 0.9, -1.4, 0.1, 1.8],
            vec![5.0, 2.0, 8.0, 1.0, 3.0, 9.0, 6.0, 2.5],
        ])
        .unwrap();
        let labels = vec![0, 1, 0, 1, 1, 0, 0, 1];
        let tree = fit_tree(&table, &labels, 2, &TreeParams::default(), &mut rng()).unwrap();
        fn walk(node: &TreeNode) {
            if let TreeNode::Split {
                impurity_decrease,
                left,
                right,
                ..
            } = node
            {
                assert!(*impurity_decrease >= 0.0);
                // Binary gini is at most 1 - 1/2.
                assert!(*impurity_decrease <= 0.5 + 1e-12);
                walk(left);
                walk(right);
            } else if let TreeNode::Leaf { distribution, .. } = node {
                let sum: f64 = distribution.iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
            }
        }
        walk(&tree);
    }

    #[test]
    fn regression_tree_fits_residual_means() {
        let table = NumericTable::from_columns(vec![vec![-2.0, -1.0, 1.0, 2.0]]).unwrap();
        let targets = vec![-0.5, -0.5, 0.5, 0.5];
        let rows: Vec<u32> = (0..4).collect();
        let mean = |rows: &[u32]| {
            rows.iter().map(|&r| targets[r as usize]).sum::<f64>() / rows.len() as f64
        };
        let tree = fit_regression_tree(
            &table,
            &targets,
            &rows,
            &TreeParams {
                max_depth: Some(3),
                ..Default::default()
            },
            &mut rng(),
            &mean,
        );
        assert_eq!(tree.predict(&table, 0), -0.5);
        assert_eq!(tree.predict(&table, 3), 0.5);
    }
}
