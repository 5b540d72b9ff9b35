//! Random forest: bagged classification trees with per-split feature
//! subsampling and majority-vote prediction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, tag};

use super::tree::{fit_tree_on_rows, TreeNode, TreeParams};
use super::{aggregate_importances, NumericTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Bootstrap-resample rows per tree; turning this off trains every tree
    /// on the full sample.
    pub bootstrap: bool,
    /// Consider only ceil(sqrt(p)) features per split.
    pub subsample_features: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            bootstrap: true,
            subsample_features: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    trees: Vec<TreeNode>,
    n_classes: usize,
    feature_importances: Vec<f64>,
    params: ForestParams,
    seed: u64,
}

impl ForestModel {
    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn feature_importances(&self) -> &[f64] {
        &self.feature_importances
    }

    pub fn predict(&self, table: &NumericTable, row: usize) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict(table, row)] += 1;
        }
        // Majority vote; ties toward the smaller class id.
        let mut best = 0;
        for (j, &v) in votes.iter().enumerate().skip(1) {
            if v > votes[best] {
                best = j;
            }
        }
        best
    }

    pub fn predict_batch(&self, table: &NumericTable) -> Vec<usize> {
        (0..table.n_rows()).map(|r| self.predict(table, r)).collect()
    }
}

/// Fit a forest. Each tree draws its bootstrap sample and split-time feature
/// subsets from its own RNG stream derived from `(seed, tree index)`, so the
/// model does not depend on tree build order.
pub fn fit_forest(
    table: &NumericTable,
    labels: &[usize],
    n_classes: usize,
    params: &ForestParams,
    seed_value: u64,
) -> Result<ForestModel> {
    if table.n_rows() == 0 {
        return Err(Error::Fit("cannot fit a forest on zero rows".into()));
    }
    if labels.len() != table.n_rows() {
        return Err(Error::Fit(format!(
            "{} labels for {} rows",
            labels.len(),
            table.n_rows()
        )));
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidInput("n_trees must be positive".into()));
    }
    let n = table.n_rows();
    let p = table.n_features();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        feature_subsample: params
            .subsample_features
            .then(|| (p as f64).sqrt().ceil() as usize),
    };

    let mut trees = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let mut rng = seed::rng(seed_value, &[tag::FOREST_TREE, t as u64]);
        let rows: Vec<u32> = if params.bootstrap {
            (0..n).map(|_| rng.random_range(0..n) as u32).collect()
        } else {
            (0..n as u32).collect()
        };
        trees.push(fit_tree_on_rows(
            table,
            labels,
            n_classes,
            &rows,
            &tree_params,
            &mut rng,
        ));
    }

    let per_tree: Vec<Vec<f64>> = trees.iter().map(|t| t.raw_importances(p)).collect();
    let feature_importances = aggregate_importances(&per_tree, p)?;

    Ok(ForestModel {
        trees,
        n_classes,
        feature_importances,
        params: *params,
        seed: seed_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};
    use crate::seed;

    fn separable() -> (NumericTable, Vec<usize>) {
        let ds = generate_synthetic(&SyntheticSpec {
            n_rows: 200,
            n_features: 5,
            n_informative: 1,
            class_separation: 6.0,
            seed: 21,
        })
        .unwrap();
        (
            NumericTable::from_complete(&ds).unwrap(),
            ds.labels().to_vec(),
        )
    }

    #[test]
    fn degenerate_forest_equals_bare_tree() {
        let (table, labels) = separable();
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            subsample_features: false,
            ..Default::default()
        };
        let forest = fit_forest(&table, &labels, 2, &params, 3).unwrap();
        let mut rng = seed::rng(3, &[tag::FOREST_TREE, 0]);
        let tree = super::super::tree::fit_tree(
            &table,
            &labels,
            2,
            &TreeParams::default(),
            &mut rng,
        )
        .unwrap();
        for r in 0..table.n_rows() {
            assert_eq!(forest.predict(&table, r), tree.predict(&table, r));
        }
    }

    #[test]
    fn same_seed_same_model() {
        let (table, labels) = separable();
        let params = ForestParams {
            n_trees: 11,
            ..Default::default()
        };
        let a = fit_forest(&table, &labels, 2, &params, 5).unwrap();
        let b = fit_forest(&table, &labels, 2, &params, 5).unwrap();
        assert_eq!(a.feature_importances(), b.feature_importances());
        assert_eq!(a.predict_batch(&table), b.predict_batch(&table));
        let c = fit_forest(&table, &labels, 2, &params, 6).unwrap();
        assert_ne!(a.feature_importances(), c.feature_importances());
    }

    #[test]
    fn informative_feature_dominates_importance() {
        let (table, labels) = separable();
        let params = ForestParams {
            n_trees: 25,
            ..Default::default()
        };
        let forest = fit_forest(&table, &labels, 2, &params, 7).unwrap();
        let imp = forest.feature_importances();
        let sum: f64 = imp.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(
            imp[0] >= 0.8,
            "informative feature importance {} too low: {imp:?}",
            imp[0]
        );
    }

    #[test]
    fn vote_stabilizes_on_separable_data() {
        let (table, labels) = separable();
        let small = fit_forest(
            &table,
            &labels,
            2,
            &ForestParams {
                n_trees: 51,
                ..Default::default()
            },
            9,
        )
        .unwrap();
        let large = fit_forest(
            &table,
            &labels,
            2,
            &ForestParams {
                n_trees: 101,
                ..Default::default()
            },
            9,
        )
        .unwrap();
        let a = small.predict_batch(&table);
        let b = large.predict_batch(&table);
        let agree = a.iter().zip(&b).filter(|(x, y)| x == y).count();
        assert!(agree as f64 / a.len() as f64 >= 0.99);
    }
}
