//! Training-statistics imputation: median for numeric columns, mode for
//! categorical ones. Fit on the training split only; apply leaves observed
//! cells untouched.

use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnValues, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum FillValue {
    Numeric(f64),
    Categorical(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imputer {
    fills: Vec<FillValue>,
}

impl Imputer {
    /// Learn per-column fill values from the observed training cells.
    pub fn fit(train: &Dataset) -> Result<Imputer> {
        let mut fills = Vec::with_capacity(train.n_features());
        for (k, col) in train.columns().iter().enumerate() {
            if col.observed_count() == 0 {
                return Err(Error::column_fit(
                    train.feature_name(k),
                    "fully missing in training data; no fill value",
                ));
            }
            let fill = match &col.values {
                ColumnValues::Numeric(_) => {
                    let mut v = col.observed_numeric();
                    v.sort_by(|a, b| a.partial_cmp(b).expect("finite cells"));
                    let m = v.len();
                    let median = if m % 2 == 1 {
                        v[m / 2]
                    } else {
                        0.5 * (v[m / 2 - 1] + v[m / 2])
                    };
                    FillValue::Numeric(median)
                }
                ColumnValues::Categorical {
                    codes,
                    n_categories,
                    ..
                } => {
                    let mut counts = vec![0usize; *n_categories as usize];
                    for (i, &c) in codes.iter().enumerate() {
                        if col.mask[i] {
                            counts[c as usize] += 1;
                        }
                    }
                    // Mode; ties toward the smallest code.
                    let mode = counts
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                        .map(|(c, _)| c as u32)
                        .unwrap_or(0);
                    FillValue::Categorical(mode)
                }
            };
            fills.push(fill);
        }
        Ok(Imputer { fills })
    }

    /// Fill every missing cell; the result has an all-observed mask.
    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        if self.fills.len() != dataset.n_features() {
            return Err(Error::InvalidInput(format!(
                "imputer has {} fills for {} features",
                self.fills.len(),
                dataset.n_features()
            )));
        }
        let n = dataset.n_rows();
        let columns = dataset
            .columns()
            .iter()
            .zip(&self.fills)
            .enumerate()
            .map(|(k, (col, fill))| {
                let values = match (&col.values, fill) {
                    (ColumnValues::Numeric(v), FillValue::Numeric(fill)) => {
                        let filled = v
                            .iter()
                            .zip(&col.mask)
                            .map(|(&x, &m)| if m { x } else { *fill })
                            .collect();
                        ColumnValues::Numeric(filled)
                    }
                    (
                        ColumnValues::Categorical {
                            codes,
                            n_categories,
                            levels,
                        },
                        FillValue::Categorical(fill),
                    ) => ColumnValues::Categorical {
                        codes: codes
                            .iter()
                            .zip(&col.mask)
                            .map(|(&c, &m)| if m { c } else { *fill })
                            .collect(),
                        n_categories: *n_categories,
                        levels: levels.clone(),
                    },
                    _ => {
                        return Err(Error::InvalidInput(format!(
                            "imputer fill kind mismatch for column '{}'",
                            dataset.feature_name(k)
                        )))
                    }
                };
                Ok(Column {
                    values,
                    mask: vec![true; n],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        dataset.with_columns(columns)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{inject_missing, MissingnessSpec};

    fn with_gap() -> Dataset {
        Dataset::new(
            vec!["a".into()],
            vec![Column::numeric(
                vec![1.0, 0.0, 3.0],
                vec![true, false, true],
            )],
            vec![0, 1, 0],
            vec!["x".into(), "y".into()],
        )
        .unwrap()
    }

    #[test]
    fn median_fill() {
        let ds = with_gap();
        let imp = Imputer::fit(&ds).unwrap();
        let out = imp.apply(&ds).unwrap();
        assert_eq!(out.column(0).numeric_at(1), Some(2.0));
        assert_eq!(out.column(0).numeric_at(0), Some(1.0));
        assert_eq!(out.column(0).observed_count(), 3);
    }

    #[test]
    fn complete_data_is_identity() {
        let ds = Dataset::new(
            vec!["a".into()],
            vec![Column::numeric(vec![1.0, 2.0], vec![true, true])],
            vec![0, 1],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let imp = Imputer::fit(&ds).unwrap();
        assert_eq!(imp.apply(&ds).unwrap(), ds);
    }

    #[test]
    fn test_split_uses_training_medians() {
        // Training median is 2; the test split's own median would be 100.
        let train = with_gap();
        let test = Dataset::new(
            vec!["a".into()],
            vec![Column::numeric(
                vec![100.0, 0.0, 100.0],
                vec![true, false, true],
            )],
            vec![0, 1, 0],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let imp = Imputer::fit(&train).unwrap();
        let out = imp.apply(&test).unwrap();
        assert_eq!(out.column(0).numeric_at(1), Some(2.0));
    }

    #[test]
    fn mode_fill_for_categorical() {
        let ds = Dataset::new(
            vec!["c".into()],
            vec![Column::categorical(
                vec![1, 1, 2, 0, 0],
                3,
                vec![true, true, true, false, false],
            )],
            vec![0, 1, 0, 1, 0],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let imp = Imputer::fit(&ds).unwrap();
        let out = imp.apply(&ds).unwrap();
        assert_eq!(out.column(0).category_at(3), Some(1));
        assert_eq!(out.column(0).category_at(4), Some(1));
    }

    #[test]
    fn fully_missing_column_is_an_error() {
        let ds = Dataset::new(
            vec!["a".into()],
            vec![Column::numeric(vec![0.0, 0.0], vec![false, false])],
            vec![0, 1],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let err = Imputer::fit(&ds).unwrap_err();
        assert!(err.to_string().contains("'a'"), "{err}");
    }

    #[test]
    fn injected_then_imputed_dataset_is_complete() {
        let values: Vec<f64> = (0..60).map(|i| (i as f64) * 0.5).collect();
        let ds = Dataset::new(
            vec!["a".into(), "b".into()],
            vec![
                Column::numeric(values.clone(), vec![true; 60]),
                Column::numeric(values, vec![true; 60]),
            ],
            (0..60).map(|i| i % 2).collect(),
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let injected = inject_missing(
            &ds,
            &MissingnessSpec {
                fraction: 0.3,
                seed: 2,
            },
        )
        .unwrap();
        let imp = Imputer::fit(&injected).unwrap();
        let out = imp.apply(&injected).unwrap();
        for col in out.columns() {
            assert_eq!(col.observed_count(), 60);
        }
        // Observed cells pass through unchanged.
        for k in 0..2 {
            for i in 0..60 {
                if injected.column(k).is_observed(i) {
                    assert_eq!(
                        out.column(k).numeric_at(i),
                        injected.column(k).numeric_at(i)
                    );
                }
            }
        }
    }
}
