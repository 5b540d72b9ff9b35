//! Report assembly and emission: full-precision JSON, a flat CSV of metric
//! cells, and plot-ready CSVs (method bars, metric-vs-level curves,
//! stability mean/std points).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{ConfusionCounts, SignificanceTrace, StabilitySummary};

use super::{Cell, CellMetrics, CellOutcome, ExperimentConfig, StabilityBlock};

/// Seed-averaged importance vector for one `(model, level)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub model: String,
    pub level: f64,
    pub importances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStability {
    pub model: String,
    pub summary: StabilitySummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub dataset: String,
    /// SHA-256 of the embedded config's canonical JSON.
    pub config_hash: String,
    /// Wall-clock time of assembly; the only non-deterministic field.
    pub timestamp: String,
    pub toolkit_version: String,
    pub config: ExperimentConfig,
    pub cells: Vec<Cell>,
    pub importances: Vec<ImportanceRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<SignificanceTrace>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stability: Vec<ModelStability>,
    pub n_failures: usize,
}

pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let canonical = serde_json::to_vec(config)?;
    let mut hasher = Sha256::new();
    hasher.update(&canonical);
    Ok(hex_string(&hasher.finalize()))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unix_timestamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("{secs}")
}

pub(super) fn assemble(
    experiment: &str,
    config: &ExperimentConfig,
    cells: Vec<Cell>,
    stability: Option<StabilityBlock>,
) -> Result<ExperimentReport> {
    let mut importances = Vec::new();
    for model in &config.roster {
        let name = model.name();
        for &level in &config.levels {
            let vectors: Vec<&Vec<f64>> = cells
                .iter()
                .filter(|c| c.model == name && c.level == level)
                .filter_map(|c| c.metrics())
                .map(|m| &m.importances)
                .collect();
            if vectors.is_empty() {
                continue;
            }
            let p = vectors[0].len();
            let mut mean = vec![0.0f64; p];
            for v in &vectors {
                for (m, &x) in mean.iter_mut().zip(v.iter()) {
                    *m += x;
                }
            }
            for m in &mut mean {
                *m /= vectors.len() as f64;
            }
            importances.push(ImportanceRow {
                model: name.clone(),
                level,
                importances: mean,
            });
        }
    }

    let n_failures = cells
        .iter()
        .filter(|c| matches!(c.outcome, CellOutcome::Failed { .. }))
        .count();
    let (traces, stability_rows) = match stability {
        Some(block) => (block.traces, block.summaries),
        None => (Vec::new(), Vec::new()),
    };

    Ok(ExperimentReport {
        experiment: experiment.to_string(),
        dataset: config.dataset_name.clone(),
        config_hash: config_hash(config)?,
        timestamp: unix_timestamp(),
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        cells,
        importances,
        traces,
        stability: stability_rows,
        n_failures,
    })
}

impl ExperimentReport {
    pub fn load(path: &Path) -> Result<ExperimentReport> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Report(e.to_string()))
    }

    /// Mean of a metric over the seeds of one `(model, level)`; `None` when
    /// no successful cell carries a defined value.
    pub fn seed_mean<F>(&self, model: &str, level: f64, metric: F) -> Option<f64>
    where
        F: Fn(&CellMetrics) -> Option<f64>,
    {
        let values: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.model == model && c.level == level)
            .filter_map(|c| c.metrics())
            .filter_map(&metric)
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }

    pub fn model_names(&self) -> Vec<String> {
        self.config.roster.iter().map(|m| m.name()).collect()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    // Shortest round-trip decimal; empty cell = undefined (never 0).
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|e| Error::Report(format!("bad float '{s}': {e}")))
}

/// Write all report artifacts into `out_dir`. The directory is created and
/// probed for writability before any artifact is written, so a failure here
/// never leaves a partial report behind.
pub fn emit_report(report: &ExperimentReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Report(format!("cannot create {}: {e}", out_dir.display())))?;
    let probe = out_dir.join(".write_probe");
    std::fs::write(&probe, b"probe")
        .map_err(|e| Error::Report(format!("{} is not writable: {e}", out_dir.display())))?;
    std::fs::remove_file(&probe).ok();

    let mut written = Vec::new();

    let json_path = out_dir.join("report.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(report)?)?;
    written.push(json_path);

    let cells_path = out_dir.join("cells.csv");
    write_cells_csv(report, &cells_path)?;
    written.push(cells_path);

    match report.experiment.as_str() {
        "abstractions" => {
            let p = out_dir.join("plot_methods.csv");
            write_method_bars_csv(report, &p)?;
            written.push(p);
        }
        "sweep" | "stability" => {
            let p = out_dir.join("plot_sweep.csv");
            write_sweep_csv(report, &p)?;
            written.push(p);
            let p = out_dir.join("plot_curves.csv");
            write_curves_csv(report, &p)?;
            written.push(p);
            if !report.stability.is_empty() {
                let p = out_dir.join("plot_stability.csv");
                write_stability_csv(report, &p)?;
                written.push(p);
            }
        }
        _ => {}
    }
    Ok(written)
}

fn write_cells_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "dataset", "model", "level", "seed", "status", "ba", "precision", "recall", "tp", "fp",
        "tn", "fn", "error",
    ])?;
    for cell in &report.cells {
        match &cell.outcome {
            CellOutcome::Ok(m) => w.write_record([
                report.dataset.clone(),
                cell.model.clone(),
                format!("{}", cell.level),
                format!("{}", cell.seed),
                "ok".into(),
                fmt_opt(m.balanced_accuracy),
                fmt_opt(m.precision),
                fmt_opt(m.recall),
                format!("{}", m.confusion.true_pos),
                format!("{}", m.confusion.false_pos),
                format!("{}", m.confusion.true_neg),
                format!("{}", m.confusion.false_neg),
                String::new(),
            ])?,
            CellOutcome::Failed { error } => w.write_record([
                report.dataset.clone(),
                cell.model.clone(),
                format!("{}", cell.level),
                format!("{}", cell.seed),
                "failed".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                error.clone(),
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Parse `cells.csv` back into cells (importances and warnings live only in
/// the JSON report). Used to verify the CSV round trip.
pub fn read_cells_csv(path: &Path) -> Result<Vec<Cell>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut cells = Vec::new();
    for record in reader.records() {
        let r = record?;
        let get = |i: usize| r.get(i).unwrap_or("").to_string();
        let level: f64 = get(2)
            .parse()
            .map_err(|e| Error::Report(format!("bad level: {e}")))?;
        let seed: u64 = get(3)
            .parse()
            .map_err(|e| Error::Report(format!("bad seed: {e}")))?;
        let outcome = if get(4) == "ok" {
            let parse_count = |i: usize| -> Result<usize> {
                get(i)
                    .parse()
                    .map_err(|e| Error::Report(format!("bad count: {e}")))
            };
            CellOutcome::Ok(CellMetrics {
                confusion: ConfusionCounts {
                    true_pos: parse_count(8)?,
                    false_pos: parse_count(9)?,
                    true_neg: parse_count(10)?,
                    false_neg: parse_count(11)?,
                },
                balanced_accuracy: parse_opt(&get(5))?,
                precision: parse_opt(&get(6))?,
                recall: parse_opt(&get(7))?,
                importances: Vec::new(),
                warnings: Vec::new(),
            })
        } else {
            CellOutcome::Failed { error: get(12) }
        };
        cells.push(Cell {
            model: get(1),
            level,
            seed,
            outcome,
        });
    }
    Ok(cells)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Grouped-bars data: one row per (dataset, model) at level 0.
fn write_method_bars_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["dataset", "model", "mean_ba", "std_ba", "n_seeds"])?;
    for model in report.model_names() {
        let values: Vec<f64> = report
            .cells
            .iter()
            .filter(|c| c.model == model && c.level == 0.0)
            .filter_map(|c| c.metrics())
            .filter_map(|m| m.balanced_accuracy)
            .collect();
        if values.is_empty() {
            continue;
        }
        let (mean, std) = mean_std(&values);
        w.write_record([
            report.dataset.clone(),
            model,
            format!("{mean}"),
            format!("{std}"),
            format!("{}", values.len()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-seed sweep rows, one per metric cell.
fn write_sweep_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["dataset", "model", "level", "seed", "ba", "precision", "recall"])?;
    for cell in &report.cells {
        if let Some(m) = cell.metrics() {
            w.write_record([
                report.dataset.clone(),
                cell.model.clone(),
                format!("{}", cell.level),
                format!("{}", cell.seed),
                fmt_opt(m.balanced_accuracy),
                fmt_opt(m.precision),
                fmt_opt(m.recall),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Metric-vs-level lines: seed means per (model, level).
fn write_curves_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "dataset",
        "model",
        "level",
        "mean_ba",
        "mean_precision",
        "mean_recall",
    ])?;
    for model in report.model_names() {
        for &level in &report.config.levels {
            let ba = report.seed_mean(&model, level, |m| m.balanced_accuracy);
            let precision = report.seed_mean(&model, level, |m| m.precision);
            let recall = report.seed_mean(&model, level, |m| m.recall);
            if ba.is_none() && precision.is_none() && recall.is_none() {
                continue;
            }
            w.write_record([
                report.dataset.clone(),
                model.clone(),
                format!("{level}"),
                fmt_opt(ba),
                fmt_opt(precision),
                fmt_opt(recall),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Mean ± std points of the significance change per model.
fn write_stability_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["dataset", "model", "xi_mean", "xi_std", "n_values"])?;
    for row in &report.stability {
        w.write_record([
            report.dataset.clone(),
            row.model.clone(),
            format!("{}", row.summary.mean),
            format!("{}", row.summary.std),
            format!("{}", row.summary.n_values),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::Method;
    use crate::data::SyntheticSpec;
    use crate::harness::{run_missing_sweep, DatasetSource, ModelSpec};

    fn tiny_report() -> ExperimentReport {
        let mut cfg = ExperimentConfig::new(
            "tiny",
            DatasetSource::Synthetic {
                spec: SyntheticSpec {
                    n_rows: 80,
                    n_features: 3,
                    n_informative: 1,
                    class_separation: 2.5,
                    seed: 4,
                },
            },
        );
        cfg.roster = vec![ModelSpec::Likelihood {
            method: Method::Quantile,
            n: 4,
        }];
        cfg.levels = vec![0.0, 0.5];
        cfg.seeds = vec![3, 4];
        run_missing_sweep(&cfg).unwrap()
    }

    #[test]
    fn emit_writes_expected_artifacts() {
        let report = tiny_report();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&report, dir.path()).unwrap();
        let names: Vec<String> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert!(names.contains(&"report.json".to_string()));
        assert!(names.contains(&"cells.csv".to_string()));
        assert!(names.contains(&"plot_sweep.csv".to_string()));
        assert!(names.contains(&"plot_curves.csv".to_string()));

        let loaded = ExperimentReport::load(&dir.path().join("report.json")).unwrap();
        assert_eq!(loaded.cells, report.cells);
    }

    #[test]
    fn cells_csv_round_trips_metric_cells() {
        let report = tiny_report();
        let dir = tempfile::tempdir().unwrap();
        emit_report(&report, dir.path()).unwrap();
        let cells = read_cells_csv(&dir.path().join("cells.csv")).unwrap();
        assert_eq!(cells.len(), report.cells.len());
        for (parsed, original) in cells.iter().zip(&report.cells) {
            assert_eq!(parsed.model, original.model);
            assert_eq!(parsed.level, original.level);
            assert_eq!(parsed.seed, original.seed);
            let (p, o) = (parsed.metrics().unwrap(), original.metrics().unwrap());
            assert_eq!(p.confusion, o.confusion);
            assert_eq!(p.balanced_accuracy, o.balanced_accuracy);
            assert_eq!(p.precision, o.precision);
            assert_eq!(p.recall, o.recall);
        }
    }

    #[test]
    fn config_hash_matches_embedded_config() {
        let report = tiny_report();
        assert_eq!(report.config_hash, config_hash(&report.config).unwrap());
        assert_eq!(report.config_hash.len(), 64);
    }

    #[test]
    fn sweep_plot_has_declared_columns() {
        let report = tiny_report();
        let dir = tempfile::tempdir().unwrap();
        emit_report(&report, dir.path()).unwrap();
        let mut reader = csv::Reader::from_path(dir.path().join("plot_sweep.csv")).unwrap();
        let header: Vec<String> = reader
            .headers()
            .unwrap()
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(
            header,
            vec!["dataset", "model", "level", "seed", "ba", "precision", "recall"]
        );
    }

    #[test]
    fn unwritable_directory_fails_before_partial_write() {
        let report = tiny_report();
        let dir = tempfile::tempdir().unwrap();
        let file_in_the_way = dir.path().join("blocked");
        std::fs::write(&file_in_the_way, b"x").unwrap();
        // Using a regular file as the output directory must fail cleanly.
        let err = emit_report(&report, &file_in_the_way).unwrap_err();
        assert!(err.to_string().contains("blocked"), "{err}");
    }
}
