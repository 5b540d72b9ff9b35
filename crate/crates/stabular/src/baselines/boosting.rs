//! Binary gradient boosting with logistic loss: stagewise regression trees
//! on the negative gradient (residuals `y - sigmoid(F)`), leaf values by one
//! Newton step, prediction by the sign of the accumulated score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, tag};

use super::tree::{fit_regression_tree, RegressionNode, TreeParams};
use super::{aggregate_importances, NumericTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbParams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GbParams {
    fn default() -> Self {
        GbParams {
            n_trees: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostedModel {
    trees: Vec<RegressionNode>,
    initial_score: f64,
    learning_rate: f64,
    feature_importances: Vec<f64>,
    params: GbParams,
    seed: u64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl BoostedModel {
    pub fn feature_importances(&self) -> &[f64] {
        &self.feature_importances
    }

    /// Accumulated log-odds score `F(x)`.
    pub fn decision_score(&self, table: &NumericTable, row: usize) -> f64 {
        let mut f = self.initial_score;
        for tree in &self.trees {
            f += self.learning_rate * tree.predict(table, row);
        }
        f
    }

    /// Probability-0.5 cut on the score.
    pub fn predict(&self, table: &NumericTable, row: usize) -> usize {
        usize::from(self.decision_score(table, row) > 0.0)
    }

    pub fn predict_batch(&self, table: &NumericTable) -> Vec<usize> {
        (0..table.n_rows()).map(|r| self.predict(table, r)).collect()
    }

    /// Scores after each stage (stage 0 = prior only), for diagnostics.
    pub fn staged_decision_scores(&self, table: &NumericTable) -> Vec<Vec<f64>> {
        let mut scores = vec![self.initial_score; table.n_rows()];
        let mut out = vec![scores.clone()];
        for tree in &self.trees {
            for (r, s) in scores.iter_mut().enumerate() {
                *s += self.learning_rate * tree.predict(table, r);
            }
            out.push(scores.clone());
        }
        out
    }
}

/// Fit a boosted model on binary labels.
pub fn fit_gb(
    table: &NumericTable,
    labels: &[usize],
    params: &GbParams,
    seed_value: u64,
) -> Result<BoostedModel> {
    if labels.len() != table.n_rows() {
        return Err(Error::Fit(format!(
            "{} labels for {} rows",
            labels.len(),
            table.n_rows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Fit(format!(
            "boosting requires binary class ids, got {bad}"
        )));
    }
    let n = table.n_rows();
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == n {
        return Err(Error::Fit("single-class training data".into()));
    }

    let p_bar = positives as f64 / n as f64;
    let initial_score = (p_bar / (1.0 - p_bar)).ln();

    let tree_params = TreeParams {
        max_depth: Some(params.max_depth),
        min_samples_leaf: params.min_samples_leaf,
        feature_subsample: None,
    };
    let rows: Vec<u32> = (0..n as u32).collect();

    let mut scores = vec![initial_score; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let probs: Vec<f64> = scores.iter().map(|&s| sigmoid(s)).collect();
        let residuals: Vec<f64> = labels
            .iter()
            .zip(&probs)
            .map(|(&y, &p)| y as f64 - p)
            .collect();

        // One Newton step per leaf: sum(residual) / sum(p * (1 - p)).
        let leaf_value = |leaf_rows: &[u32]| {
            let num: f64 = leaf_rows.iter().map(|&r| residuals[r as usize]).sum();
            let den: f64 = leaf_rows
                .iter()
                .map(|&r| probs[r as usize] * (1.0 - probs[r as usize]))
                .sum();
            if den < 1e-12 {
                0.0
            } else {
                num / den
            }
        };

        let mut rng = seed::rng(seed_value, &[tag::BOOST, t as u64]);
        let tree = fit_regression_tree(table, &residuals, &rows, &tree_params, &mut rng, &leaf_value);
        for (r, s) in scores.iter_mut().enumerate() {
            *s += params.learning_rate * tree.predict(table, r);
        }
        trees.push(tree);
    }

    let per_tree: Vec<Vec<f64>> = trees
        .iter()
        .map(|t| t.raw_importances(table.n_features()))
        .collect();
    let feature_importances = aggregate_importances(&per_tree, table.n_features())?;

    Ok(BoostedModel {
        trees,
        initial_score,
        learning_rate: params.learning_rate,
        feature_importances,
        params: *params,
        seed: seed_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};

    fn separable_1d() -> (NumericTable, Vec<usize>) {
        let table =
            NumericTable::from_columns(vec![vec![-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0]])
                .unwrap();
        (table, vec![0, 0, 0, 0, 1, 1, 1, 1])
    }

    #[test]
    fn zero_learning_rate_predicts_the_prior_class() {
        let table = NumericTable::from_columns(vec![vec![0.0, 1.0, 2.0, 3.0, 4.0]]).unwrap();
        let labels = vec![1, 1, 1, 0, 0]; // majority positive
        let params = GbParams {
            n_trees: 10,
            learning_rate: 0.0,
            ..Default::default()
        };
        let m = fit_gb(&table, &labels, &params, 0).unwrap();
        assert_eq!(m.predict_batch(&table), vec![1; 5]);
    }

    #[test]
    fn stumps_separate_separable_data() {
        let (table, labels) = separable_1d();
        let params = GbParams {
            n_trees: 10,
            learning_rate: 0.1,
            max_depth: 1,
            min_samples_leaf: 1,
        };
        let m = fit_gb(&table, &labels, &params, 0).unwrap();
        assert_eq!(m.predict_batch(&table), labels);
    }

    #[test]
    fn deterministic_staged_predictions() {
        let ds = generate_synthetic(&SyntheticSpec {
            n_rows: 120,
            n_features: 4,
            n_informative: 2,
            class_separation: 1.5,
            seed: 33,
        })
        .unwrap();
        let table = NumericTable::from_complete(&ds).unwrap();
        let params = GbParams {
            n_trees: 12,
            ..Default::default()
        };
        let a = fit_gb(&table, ds.labels(), &params, 4).unwrap();
        let b = fit_gb(&table, ds.labels(), &params, 4).unwrap();
        assert_eq!(
            a.staged_decision_scores(&table),
            b.staged_decision_scores(&table)
        );
    }

    #[test]
    fn single_class_training_fails() {
        let table = NumericTable::from_columns(vec![vec![0.0, 1.0]]).unwrap();
        assert!(fit_gb(&table, &[1, 1], &GbParams::default(), 0).is_err());
    }

    #[test]
    fn training_log_loss_is_non_increasing_at_small_learning_rate() {
        let ds = generate_synthetic(&SyntheticSpec {
            n_rows: 300,
            n_features: 5,
            n_informative: 1,
            class_separation: 6.0,
            seed: 11,
        })
        .unwrap();
        let table = NumericTable::from_complete(&ds).unwrap();
        let params = GbParams {
            n_trees: 40,
            learning_rate: 0.1,
            ..Default::default()
        };
        let m = fit_gb(&table, ds.labels(), &params, 2).unwrap();
        let staged = m.staged_decision_scores(&table);
        let log_loss = |scores: &[f64]| -> f64 {
            scores
                .iter()
                .zip(ds.labels())
                .map(|(&s, &y)| {
                    let p = sigmoid(s).clamp(1e-15, 1.0 - 1e-15);
                    if y == 1 {
                        -p.ln()
                    } else {
                        -(1.0 - p).ln()
                    }
                })
                .sum::<f64>()
                / scores.len() as f64
        };
        let losses: Vec<f64> = staged.iter().map(|s| log_loss(s)).collect();
        for w in losses.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12,
                "log-loss increased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn importances_are_normalized(){
        let ds = generate_synthetic(&SyntheticSpec {
            n_rows: 150,
            n_features: 6,
            n_informative: 2,
            class_separation: 2.0,
            seed: 8,
        })
        .unwrap();
        let table = NumericTable::from_complete(&ds).unwrap();
        let m = fit_gb(&table, ds.labels(), &GbParams { n_trees: 15, ..Default::default() }, 1)
            .unwrap();
        let sum: f64 = m.feature_importances().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(m.feature_importances().iter().all(|&v| v >= 0.0));
    }
}
