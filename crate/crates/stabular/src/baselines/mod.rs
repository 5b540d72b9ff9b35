//! From-scratch tree-ensemble baselines: CART decision tree, random forest,
//! and binary logistic gradient boosting, all with impurity-based (Gini)
//! feature importance. Trees consume complete numeric data, so an imputer
//! (training median / mode) is provided for incomplete datasets.

mod boosting;
mod forest;
mod impute;
mod tree;

pub use boosting::{fit_gb, BoostedModel, GbParams};
pub use forest::{fit_forest, ForestModel, ForestParams};
pub use impute::Imputer;
pub use tree::{fit_tree, RegressionNode, TreeNode, TreeParams};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnValues, Dataset};
use crate::error::{Error, Result};

const MODEL_VERSION: u32 = 1;

/// Dense column-major feature matrix for tree fitting; every cell observed.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    columns: Vec<Vec<f64>>,
    n_rows: usize,
}

impl NumericTable {
    /// Convert a complete dataset (no missing cells); categorical codes are
    /// treated as ordinal numeric values, as is standard for tree inputs.
    pub fn from_complete(dataset: &Dataset) -> Result<NumericTable> {
        let mut columns = Vec::with_capacity(dataset.n_features());
        for (k, col) in dataset.columns().iter().enumerate() {
            if col.observed_count() != col.len() {
                return Err(Error::InvalidInput(format!(
                    "column '{}' has missing cells; impute before tree fitting",
                    dataset.feature_name(k)
                )));
            }
            let values = match &col.values {
                ColumnValues::Numeric(v) => v.clone(),
                ColumnValues::Categorical { codes, .. } => {
                    codes.iter().map(|&c| c as f64).collect()
                }
            };
            columns.push(values);
        }
        Ok(NumericTable {
            columns,
            n_rows: dataset.n_rows(),
        })
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<NumericTable> {
        let n_rows = columns.first().map(|c| c.len()).unwrap_or(0);
        if columns.iter().any(|c| c.len() != n_rows) {
            return Err(Error::InvalidInput("ragged columns".into()));
        }
        Ok(NumericTable { columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.columns[feature][row]
    }
}

/// Versioned on-disk envelope shared by both ensemble kinds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EnsembleModel {
    Forest(ForestModel),
    Boosted(BoostedModel),
}

impl EnsembleModel {
    pub fn feature_importances(&self) -> &[f64] {
        match self {
            EnsembleModel::Forest(m) => m.feature_importances(),
            EnsembleModel::Boosted(m) => m.feature_importances(),
        }
    }

    pub fn predict_batch(&self, table: &NumericTable) -> Vec<usize> {
        match self {
            EnsembleModel::Forest(m) => m.predict_batch(table),
            EnsembleModel::Boosted(m) => m.predict_batch(table),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Envelope<'a> {
            version: u32,
            #[serde(flatten)]
            model: &'a EnsembleModel,
        }
        let json = serde_json::to_string_pretty(&Envelope {
            version: MODEL_VERSION,
            model: self,
        })?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<EnsembleModel> {
        #[derive(Deserialize)]
        struct Envelope {
            version: u32,
            #[serde(flatten)]
            model: EnsembleModel,
        }
        let text = std::fs::read_to_string(path)?;
        let envelope: Envelope =
            serde_json::from_str(&text).map_err(|e| Error::ModelFile(e.to_string()))?;
        if envelope.version != MODEL_VERSION {
            return Err(Error::ModelFile(format!(
                "ensemble file version {} unsupported (reader is {})",
                envelope.version, MODEL_VERSION
            )));
        }
        Ok(envelope.model)
    }
}

/// Average per-tree normalized importances and renormalize. Errors when no
/// tree in the ensemble made a single split (importances undefined).
pub(crate) fn aggregate_importances(per_tree: &[Vec<f64>], n_features: usize) -> Result<Vec<f64>> {
    let mut acc = vec![0.0f64; n_features];
    let mut contributing = 0usize;
    for tree_importance in per_tree {
        let total: f64 = tree_importance.iter().sum();
        if total > 0.0 {
            contributing += 1;
            for (a, &v) in acc.iter_mut().zip(tree_importance) {
                *a += v / total;
            }
        }
    }
    if contributing == 0 {
        return Err(Error::Fit(
            "no split in any tree; feature importances undefined".into(),
        ));
    }
    let sum: f64 = acc.iter().sum();
    for a in &mut acc {
        *a /= sum;
    }
    Ok(acc)
}
