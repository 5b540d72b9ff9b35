//! Categorical likelihood classifier over abstracted features.
//!
//! For each class `j` the model stores per-feature conditional probability
//! tables `P(x_k = v | C_j)`. A record's class likelihood is the product of
//! its observed features' table entries; missing features are skipped, so
//! prediction works for any missingness pattern, down to the all-missing
//! record (empty product = 1). Prediction picks the class with the highest
//! likelihood. Likelihoods are accumulated in log space so that wide
//! datasets cannot underflow; the argmax is unchanged by that.
//!
//! Feature ranks quantify how much a category's conditional probability
//! differs across classes, giving a per-feature importance score.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, Dataset};
use crate::error::{Error, Result};

const MODEL_VERSION: u32 = 1;

/// Probability table for one feature: `probs[class][category]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FeatureTable {
    name: String,
    n_categories: u32,
    probs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    version: u32,
    n_classes: usize,
    class_counts: Vec<usize>,
    class_names: Vec<String>,
    alpha: f64,
    features: Vec<FeatureTable>,
}

/// Per-class log likelihood of a record, plus how many of its categories
/// were outside the training universe (skipped like missing cells).
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodBreakdown {
    pub log_likelihoods: Vec<f64>,
    pub unseen_skipped: usize,
}

/// Category-level and feature-level ranks for a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRankReport {
    pub feature_names: Vec<String>,
    /// `per_category[k][v]` = rank of category `v` of feature `k`.
    pub per_category: Vec<Vec<f64>>,
    /// Mean rank per feature, the per-category ranks averaged.
    pub mean_per_feature: Vec<f64>,
}

impl ClassModel {
    /// Fit probability tables on an all-categorical dataset.
    ///
    /// `P(x_k = v | C_j) = (n_{j,k,v} + alpha) / (n_{j,k} + alpha * |U_k|)`
    /// where `n_{j,k}` counts class-`j` rows with feature `k` observed and
    /// `U_k` is the category universe of feature `k`. Missing cells count
    /// toward neither numerator nor denominator.
    pub fn fit(dataset: &Dataset, alpha: f64) -> Result<ClassModel> {
        if alpha < 0.0 {
            return Err(Error::InvalidInput(format!("alpha {alpha} must be >= 0")));
        }
        let n_classes = dataset.n_classes();
        if n_classes < 2 {
            return Err(Error::Fit("training needs at least 2 classes".into()));
        }
        let class_counts = dataset.class_counts();
        if let Some(empty) = class_counts.iter().position(|&c| c == 0) {
            return Err(Error::Fit(format!(
                "class '{}' has no training rows",
                dataset.class_names()[empty]
            )));
        }

        let mut features = Vec::with_capacity(dataset.n_features());
        for (k, col) in dataset.columns().iter().enumerate() {
            let name = dataset.feature_name(k).to_string();
            if col.kind() != ColumnKind::Categorical {
                return Err(Error::Fit(format!(
                    "column '{name}' is numeric; abstract the dataset first"
                )));
            }
            let universe = match &col.values {
                crate::data::ColumnValues::Categorical { n_categories, .. } => {
                    *n_categories as usize
                }
                _ => unreachable!(),
            };

            let mut counts = vec![vec![0usize; universe]; n_classes];
            let mut observed = vec![0usize; n_classes];
            for i in 0..dataset.n_rows() {
                if let Some(v) = col.category_at(i) {
                    let j = dataset.labels()[i];
                    counts[j][v as usize] += 1;
                    observed[j] += 1;
                }
            }

            let mut probs = Vec::with_capacity(n_classes);
            for (j, class_counts_k) in counts.iter().enumerate() {
                let denom = observed[j] as f64 + alpha * universe as f64;
                if denom == 0.0 {
                    return Err(Error::Fit(format!(
                        "feature '{name}' is observed in no rows of class '{}' and alpha = 0",
                        dataset.class_names()[j]
                    )));
                }
                probs.push(
                    class_counts_k
                        .iter()
                        .map(|&c| (c as f64 + alpha) / denom)
                        .collect(),
                );
            }
            features.push(FeatureTable {
                name,
                n_categories: universe as u32,
                probs,
            });
        }

        Ok(ClassModel {
            version: MODEL_VERSION,
            n_classes,
            class_counts,
            class_names: dataset.class_names().to_vec(),
            alpha,
            features,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    /// `P(x_k = v | C_j)` straight from the table.
    pub fn probability(&self, feature: usize, category: u32, class: usize) -> f64 {
        self.features[feature].probs[class][category as usize]
    }

    fn check_record(&self, record: &[Option<u32>]) -> Result<()> {
        if record.len() != self.features.len() {
            return Err(Error::InvalidInput(format!(
                "record has {} cells, model expects {}",
                record.len(),
                self.features.len()
            )));
        }
        Ok(())
    }

    /// Log likelihoods of every class plus the unseen-category skip count.
    /// Categories outside a feature's universe are skipped like missing
    /// cells rather than zeroing the product.
    pub fn likelihoods(&self, record: &[Option<u32>]) -> Result<LikelihoodBreakdown> {
        self.check_record(record)?;
        let mut log_likelihoods = vec![0.0f64; self.n_classes];
        let mut unseen_skipped = 0usize;
        for (table, cell) in self.features.iter().zip(record) {
            let v = match cell {
                Some(v) if *v < table.n_categories => *v as usize,
                Some(_) => {
                    unseen_skipped += 1;
                    continue;
                }
                None => continue,
            };
            for (j, ll) in log_likelihoods.iter_mut().enumerate() {
                *ll += table.probs[j][v].ln();
            }
        }
        Ok(LikelihoodBreakdown {
            log_likelihoods,
            unseen_skipped,
        })
    }

    pub fn log_likelihood(&self, record: &[Option<u32>], class: usize) -> Result<f64> {
        Ok(self.likelihoods(record)?.log_likelihoods[class])
    }

    /// `P(X | C_j)` in linear space (exponentiated log accumulation).
    pub fn likelihood(&self, record: &[Option<u32>], class: usize) -> Result<f64> {
        Ok(self.log_likelihood(record, class)?.exp())
    }

    /// Class with the highest likelihood. Ties break toward the class with
    /// more training rows, then toward the smaller class id.
    pub fn predict(&self, record: &[Option<u32>]) -> Result<usize> {
        let lls = self.likelihoods(record)?.log_likelihoods;
        Ok(self.argmax(&lls))
    }

    fn argmax(&self, log_likelihoods: &[f64]) -> usize {
        let mut best = 0usize;
        for j in 1..self.n_classes {
            let better = log_likelihoods[j] > log_likelihoods[best]
                || (log_likelihoods[j] == log_likelihoods[best]
                    && self.class_counts[j] > self.class_counts[best]);
            if better {
                best = j;
            }
        }
        best
    }

    /// Element-wise predict over a dataset's rows, order preserved. Also
    /// returns the total number of unseen categories skipped, for reporting.
    pub fn predict_batch(&self, dataset: &Dataset) -> Result<(Vec<usize>, usize)> {
        let mut predictions = Vec::with_capacity(dataset.n_rows());
        let mut unseen_total = 0usize;
        for i in 0..dataset.n_rows() {
            let record = dataset.category_row(i)?;
            let breakdown = self.likelihoods(&record)?;
            unseen_total += breakdown.unseen_skipped;
            predictions.push(self.argmax(&breakdown.log_likelihoods));
        }
        Ok((predictions, unseen_total))
    }

    /// Rank of one category: the mean absolute pairwise difference of its
    /// conditional probability across classes,
    /// `2 / (N (N - 1)) * sum_{i<j} |P(v|C_i) - P(v|C_j)|`.
    pub fn feature_rank(&self, feature: usize, category: u32) -> f64 {
        let table = &self.features[feature];
        let v = category as usize;
        let n = self.n_classes;
        let mut sum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += (table.probs[i][v] - table.probs[j][v]).abs();
            }
        }
        2.0 * sum / (n as f64 * (n as f64 - 1.0))
    }

    /// Mean rank over the feature's whole category universe.
    pub fn mean_feature_rank(&self, feature: usize) -> f64 {
        let universe = self.features[feature].n_categories;
        let sum: f64 = (0..universe).map(|v| self.feature_rank(feature, v)).sum();
        sum / universe as f64
    }

    pub fn mean_feature_ranks(&self) -> Vec<f64> {
        (0..self.features.len())
            .map(|k| self.mean_feature_rank(k))
            .collect()
    }

    pub fn rank_report(&self) -> FeatureRankReport {
        let per_category: Vec<Vec<f64>> = self
            .features
            .iter()
            .enumerate()
            .map(|(k, t)| {
                (0..t.n_categories)
                    .map(|v| self.feature_rank(k, v))
                    .collect()
            })
            .collect();
        FeatureRankReport {
            feature_names: self.features.iter().map(|f| f.name.clone()).collect(),
            mean_per_feature: self.mean_feature_ranks(),
            per_category,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ClassModel> {
        let text = std::fs::read_to_string(path)?;
        let model: ClassModel =
            serde_json::from_str(&text).map_err(|e| Error::ModelFile(e.to_string()))?;
        if model.version != MODEL_VERSION {
            return Err(Error::ModelFile(format!(
                "model file version {} unsupported (reader is {})",
                model.version, MODEL_VERSION
            )));
        }
        Ok(model)
    }
}
