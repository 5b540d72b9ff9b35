//! Missing-data injection and train/test splitting.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, tag};

use super::{ColumnValues, Dataset};

/// Column-wise MCAR injection: the same fraction of cells is removed from
/// every feature column, label column untouched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissingnessSpec {
    /// Fraction of rows to remove per column, in `[0, 1]`.
    pub fraction: f64,
    pub seed: u64,
}

/// Remove `round(fraction * n_rows)` observed cells from each feature column,
/// chosen uniformly without replacement from that column's currently-observed
/// cells. Each column uses its own RNG stream derived from
/// `(seed, column index)`, so results do not depend on column processing
/// order. Returns a new dataset; the input is untouched.
pub fn inject_missing(dataset: &Dataset, spec: &MissingnessSpec) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&spec.fraction) {
        return Err(Error::InvalidInput(format!(
            "missingness fraction {} outside [0, 1]",
            spec.fraction
        )));
    }
    let n_rows = dataset.n_rows();
    // Round half away from zero, per f64::round.
    let quota = (spec.fraction * n_rows as f64).round() as usize;

    let mut out = dataset.clone();
    if quota == 0 {
        return Ok(out);
    }

    let mut warnings = Vec::new();
    let mut columns = dataset.columns().to_vec();
    for (k, col) in columns.iter_mut().enumerate() {
        let observed: Vec<usize> = (0..n_rows).filter(|&i| col.mask[i]).collect();
        let removed: Vec<usize> = if observed.len() < quota {
            warnings.push(format!(
                "column '{}': quota {} exceeds {} observed cells; removing all",
                dataset.feature_name(k),
                quota,
                observed.len()
            ));
            observed
        } else {
            let mut rng = seed::rng(spec.seed, &[tag::INJECT_COLUMN, k as u64]);
            sample(&mut rng, observed.len(), quota)
                .iter()
                .map(|j| observed[j])
                .collect()
        };
        for i in removed {
            col.mask[i] = false;
            // A missing cell carries no value; zero the slot.
            match &mut col.values {
                ColumnValues::Numeric(v) => v[i] = 0.0,
                ColumnValues::Categorical { codes, .. } => codes[i] = 0,
            }
        }
    }
    out = dataset.with_columns(columns)?;
    for w in warnings {
        out.push_warning(w);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

/// Row-disjoint (train, test) partition, deterministic in the seed. With
/// `stratified` the per-class test count is `round(test_fraction * class
/// size)`, which deviates from the exact proportion by at most one row.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "test_fraction {} outside (0, 1)",
            spec.test_fraction
        )));
    }
    let n = dataset.n_rows();
    let mut test_rows: Vec<usize> = Vec::new();

    if spec.stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.n_classes()];
        for (i, &l) in dataset.labels().iter().enumerate() {
            by_class[l].push(i);
        }
        for (class, rows) in by_class.iter_mut().enumerate() {
            if rows.is_empty() {
                continue;
            }
            if rows.len() < 2 {
                return Err(Error::InvalidInput(format!(
                    "class '{}' has fewer than 2 rows; cannot stratify",
                    dataset.class_names()[class]
                )));
            }
            let mut rng = seed::rng(spec.seed, &[tag::SPLIT_CLASS, class as u64]);
            rows.shuffle(&mut rng);
            let take = ((spec.test_fraction * rows.len() as f64).round() as usize).min(rows.len());
            test_rows.extend_from_slice(&rows[..take]);
        }
    } else {
        let mut rows: Vec<usize> = (0..n).collect();
        let mut rng = seed::rng(spec.seed, &[tag::SPLIT]);
        rows.shuffle(&mut rng);
        let take = ((spec.test_fraction * n as f64).round() as usize).min(n);
        test_rows.extend_from_slice(&rows[..take]);
    }

    test_rows.sort_unstable();
    let in_test = {
        let mut v = vec![false; n];
        for &r in &test_rows {
            v[r] = true;
        }
        v
    };
    let train_rows: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();

    if train_rows.is_empty() || test_rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "split produced an empty side ({} train / {} test rows)",
            train_rows.len(),
            test_rows.len()
        )));
    }
    Ok((
        dataset.select_rows(&train_rows)?,
        dataset.select_rows(&test_rows)?,
    ))
}
