//! CSV ingestion and emission.
//!
//! Format: UTF-8, comma-separated, one header row. Cells equal to one of the
//! configured sentinels (default: the empty string) are missing. Column kinds
//! are inferred — numeric when every observed cell parses as a finite real —
//! unless overridden.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

use super::{Column, ColumnKind, ColumnValues, Dataset};

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: String,
    /// Cell contents treated as missing, compared after trimming.
    pub missing_sentinels: Vec<String>,
    /// Per-column kind overrides; inferred when absent.
    pub kind_overrides: BTreeMap<String, ColumnKind>,
}

impl CsvOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        CsvOptions {
            label_column: label_column.into(),
            missing_sentinels: vec![String::new()],
            kind_overrides: BTreeMap::new(),
        }
    }
}

pub fn load_csv(path: &Path, opts: &CsvOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Ingestion(format!("reading header: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let label_idx = headers
        .iter()
        .position(|h| h == &opts.label_column)
        .ok_or_else(|| {
            Error::Ingestion(format!(
                "label column '{}' not found in header",
                opts.label_column
            ))
        })?;

    let mut raw: Vec<Vec<Option<String>>> = vec![Vec::new(); headers.len()];
    let mut label_raw: Vec<String> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Ingestion(format!("row {}: {e}", row_idx + 1)))?;
        if record.len() != headers.len() {
            return Err(Error::Ingestion(format!(
                "row {}: {} fields, expected {}",
                row_idx + 1,
                record.len(),
                headers.len()
            )));
        }
        for (col_idx, cell) in record.iter().enumerate() {
            let trimmed = cell.trim();
            let missing = opts.missing_sentinels.iter().any(|s| s == trimmed);
            if col_idx == label_idx {
                if missing {
                    return Err(Error::Ingestion(format!(
                        "row {}: missing label cell",
                        row_idx + 1
                    )));
                }
                label_raw.push(trimmed.to_string());
            } else {
                raw[col_idx].push((!missing).then(|| trimmed.to_string()));
            }
        }
    }

    // Label values map to contiguous class ids in first-appearance order.
    let mut class_names: Vec<String> = Vec::new();
    let labels: Vec<usize> = label_raw
        .iter()
        .map(|v| {
            if let Some(pos) = class_names.iter().position(|c| c == v) {
                pos
            } else {
                class_names.push(v.clone());
                class_names.len() - 1
            }
        })
        .collect();

    let mut feature_names = Vec::new();
    let mut columns = Vec::new();
    let mut warnings = Vec::new();
    for (col_idx, name) in headers.iter().enumerate() {
        if col_idx == label_idx {
            continue;
        }
        let cells = &raw[col_idx];
        let declared = opts.kind_overrides.get(name).copied();
        let kind = match declared {
            Some(k) => k,
            None => infer_kind(cells),
        };
        let column = match kind {
            ColumnKind::Numeric => parse_numeric(name, cells, declared.is_some())?,
            ColumnKind::Categorical => parse_categorical(cells),
        };
        if cells.iter().all(|c| c.is_none()) {
            warnings.push(format!("column '{name}' has no observed cells"));
        }
        feature_names.push(name.clone());
        columns.push(column);
    }

    let mut ds = Dataset::new(feature_names, columns, labels, class_names)?;
    for w in warnings {
        ds.push_warning(w);
    }
    Ok(ds)
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn infer_kind(cells: &[Option<String>]) -> ColumnKind {
    let all_numeric = cells
        .iter()
        .flatten()
        .all(|c| parse_finite(c).is_some());
    if all_numeric {
        ColumnKind::Numeric
    } else {
        ColumnKind::Categorical
    }
}

fn parse_numeric(name: &str, cells: &[Option<String>], declared: bool) -> Result<Column> {
    let mut values = Vec::with_capacity(cells.len());
    let mut mask = Vec::with_capacity(cells.len());
    for (i, cell) in cells.iter().enumerate() {
        match cell {
            None => {
                values.push(0.0);
                mask.push(false);
            }
            Some(s) => match parse_finite(s) {
                Some(x) => {
                    values.push(x);
                    mask.push(true);
                }
                None => {
                    // Unreachable for inferred columns; declared ones must fail loudly.
                    debug_assert!(declared);
                    return Err(Error::Ingestion(format!(
                        "row {}, column '{}': cell '{}' is not a finite number",
                        i + 1,
                        name,
                        s
                    )));
                }
            },
        }
    }
    Ok(Column::numeric(values, mask))
}

fn parse_categorical(cells: &[Option<String>]) -> Column {
    let mut levels: Vec<String> = Vec::new();
    let mut codes = Vec::with_capacity(cells.len());
    let mut mask = Vec::with_capacity(cells.len());
    for cell in cells {
        match cell {
            None => {
                codes.push(0);
                mask.push(false);
            }
            Some(s) => {
                let code = match levels.iter().position(|l| l == s) {
                    Some(p) => p,
                    None => {
                        levels.push(s.clone());
                        levels.len() - 1
                    }
                };
                codes.push(code as u32);
                mask.push(true);
            }
        }
    }
    let n_categories = levels.len().max(1) as u32;
    Column {
        values: ColumnValues::Categorical {
            codes,
            n_categories,
            levels: Some(levels),
        },
        mask,
    }
}

/// Write a dataset back out as CSV (label column first). Missing cells become
/// empty cells; numbers use the shortest round-trip decimal form.
pub fn write_csv(dataset: &Dataset, path: &Path, label_column: &str) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec![label_column.to_string()];
    header.extend(dataset.feature_names().iter().cloned());
    writer.write_record(&header)?;
    for i in 0..dataset.n_rows() {
        let mut record = vec![dataset.class_names()[dataset.labels()[i]].clone()];
        for col in dataset.columns() {
            if !col.is_observed(i) {
                record.push(String::new());
                continue;
            }
            match &col.values {
                ColumnValues::Numeric(v) => record.push(format!("{}", v[i])),
                ColumnValues::Categorical { codes, levels, .. } => match levels {
                    Some(l) => record.push(l[codes[i] as usize].clone()),
                    None => record.push(format!("{}", codes[i])),
                },
            }
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_missing_cells_and_labels() {
        let f = write_tmp("a,label\n1,yes\n,no\n2,yes\n");
        let ds = load_csv(f.path(), &CsvOptions::new("label")).unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.n_features(), 1);
        let col = ds.column(0);
        assert_eq!(
            (0..3).map(|i| col.is_observed(i)).collect::<Vec<_>>(),
            vec![true, false, true]
        );
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.class_names(), &["yes".to_string(), "no".to_string()]);
    }

    #[test]
    fn missing_label_is_an_error() {
        let f = write_tmp("a,label\n1,yes\n2,\n");
        let err = load_csv(f.path(), &CsvOptions::new("label")).unwrap_err();
        assert!(err.to_string().contains("missing label"));
    }

    #[test]
    fn declared_numeric_with_garbage_cell_errors_with_location() {
        let f = write_tmp("a,label\n1,yes\nx,no\n");
        let mut opts = CsvOptions::new("label");
        opts.kind_overrides.insert("a".into(), ColumnKind::Numeric);
        let err = load_csv(f.path(), &opts).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("'a'"), "{msg}");
    }

    #[test]
    fn inference_falls_back_to_categorical() {
        let f = write_tmp("a,label\nred,yes\nblue,no\nred,yes\n");
        let ds = load_csv(f.path(), &CsvOptions::new("label")).unwrap();
        assert_eq!(ds.column(0).kind(), ColumnKind::Categorical);
        assert_eq!(ds.column(0).category_at(0), Some(0));
        assert_eq!(ds.column(0).category_at(1), Some(1));
        assert_eq!(ds.column(0).category_at(2), Some(0));
    }

    #[test]
    fn custom_sentinels_mark_missing() {
        let f = write_tmp("a,label\n1,yes\nNA,no\n?,yes\n");
        let mut opts = CsvOptions::new("label");
        opts.missing_sentinels = vec!["".into(), "NA".into(), "?".into()];
        let ds = load_csv(f.path(), &opts).unwrap();
        assert_eq!(ds.column(0).kind(), ColumnKind::Numeric);
        assert_eq!(ds.column(0).observed_count(), 1);
    }

    #[test]
    fn nan_string_is_not_a_finite_numeric_cell() {
        let f = write_tmp("a,label\nNaN,yes\n1.5,no\n");
        let ds = load_csv(f.path(), &CsvOptions::new("label")).unwrap();
        // "NaN" parses as a float but is not finite, so the column falls back
        // to categorical under inference.
        assert_eq!(ds.column(0).kind(), ColumnKind::Categorical);
    }

    #[test]
    fn round_trip_preserves_cells() {
        let f = write_tmp("a,b,label\n1.5,red,yes\n,blue,no\n2.25,,yes\n");
        let ds = load_csv(f.path(), &CsvOptions::new("label")).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, out.path(), "label").unwrap();
        let ds2 = load_csv(out.path(), &CsvOptions::new("label")).unwrap();
        assert_eq!(ds, ds2);
    }
}
