//! Synthetic binary datasets for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, tag};

use super::{Column, Dataset};

/// Balanced two-class dataset: the first `n_informative` features are drawn
/// from class-conditional normals whose means differ by `class_separation`
/// standard deviations; the rest are class-independent `N(0, 1)` noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_features: usize,
    pub n_informative: usize,
    pub class_separation: f64,
    pub seed: u64,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.n_informative > spec.n_features {
        return Err(Error::InvalidInput(format!(
            "n_informative {} exceeds n_features {}",
            spec.n_informative, spec.n_features
        )));
    }
    if spec.n_rows < 4 || spec.n_features == 0 {
        return Err(Error::InvalidInput(
            "synthetic dataset needs at least 4 rows and 1 feature".into(),
        ));
    }

    let n = spec.n_rows;
    let mut labels: Vec<usize> = (0..n).map(|i| usize::from(i >= n / 2)).collect();
    labels.shuffle(&mut seed::rng(spec.seed, &[tag::SYNTH_LABELS]));

    let width = spec.n_features.to_string().len();
    let mut feature_names = Vec::with_capacity(spec.n_features);
    let mut columns = Vec::with_capacity(spec.n_features);
    for j in 0..spec.n_features {
        feature_names.push(format!("f{j:0width$}"));
        let mut rng = seed::rng(spec.seed, &[tag::SYNTH_FEATURE, j as u64]);
        let values: Vec<f64> = (0..n)
            .map(|i| {
                let noise: f64 = rng.sample(StandardNormal);
                if j < spec.n_informative && labels[i] == 1 {
                    noise + spec.class_separation
                } else {
                    noise
                }
            })
            .collect();
        columns.push(Column::numeric(values, vec![true; n]));
    }

    Dataset::new(
        feature_names,
        columns,
        labels,
        vec!["neg".into(), "pos".into()],
    )
}
