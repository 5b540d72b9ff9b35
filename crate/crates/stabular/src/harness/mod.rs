//! Experiment orchestration: runs a roster of models over a grid of
//! missingness levels and seeds, recording metrics, feature importances, and
//! stability summaries into a self-describing report.
//!
//! All randomness flows from named streams derived from `(seed, stage,
//! index)`, and grid cells are independent jobs, so parallel and serial
//! execution produce identical reports.

mod report;

pub use report::{emit_report, read_cells_csv, ExperimentReport, ImportanceRow, ModelStability};

use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abstraction::{self, Method};
use crate::baselines::{fit_forest, fit_gb, ForestParams, GbParams, Imputer, NumericTable};
use crate::classifier::ClassModel;
use crate::data::{
    generate_synthetic, inject_missing, load_csv, split, CsvOptions, Dataset, MissingnessSpec,
    SplitSpec, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::eval::{
    balanced_accuracy, confusion, precision, recall, stability_summary, ConfusionCounts,
    SignificanceTrace, StabilityOptions,
};
use crate::seed::{self, tag};

/// Environment variable overriding the worker-thread count.
pub const WORKERS_ENV: &str = "STABULAR_WORKERS";

/// Where the experiment data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        label_column: String,
        #[serde(default)]
        missing_sentinels: Option<Vec<String>>,
    },
    Synthetic {
        #[serde(flatten)]
        spec: SyntheticSpec,
    },
}

pub fn load_dataset(source: &DatasetSource) -> Result<Dataset> {
    match source {
        DatasetSource::Csv {
            path,
            label_column,
            missing_sentinels,
        } => {
            let mut opts = CsvOptions::new(label_column.clone());
            if let Some(sentinels) = missing_sentinels {
                opts.missing_sentinels = sentinels.clone();
            }
            load_csv(path, &opts)
        }
        DatasetSource::Synthetic { spec } => generate_synthetic(spec),
    }
}

/// One entry of the model roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelSpec {
    /// The abstraction likelihood classifier with one discretization scheme.
    Likelihood { method: Method, n: u32 },
    RandomForest {
        #[serde(default)]
        params: ForestParams,
    },
    GradientBoosting {
        #[serde(default)]
        params: GbParams,
    },
}

impl ModelSpec {
    pub fn name(&self) -> String {
        match self {
            ModelSpec::Likelihood { method, n } => match method {
                Method::Roc => "likelihood-roc".to_string(),
                Method::Static => format!("likelihood-static-{n}"),
                Method::Quantile => format!("likelihood-quantile-{n}"),
            },
            ModelSpec::RandomForest { .. } => "random-forest".to_string(),
            ModelSpec::GradientBoosting { .. } => "gradient-boosting".to_string(),
        }
    }

    pub fn is_likelihood(&self) -> bool {
        matches!(self, ModelSpec::Likelihood { .. })
    }
}

/// The default roster: the likelihood classifier under all five abstraction
/// settings plus both tree ensembles at their stock hyperparameters.
pub fn default_roster() -> Vec<ModelSpec> {
    vec![
        ModelSpec::Likelihood {
            method: Method::Roc,
            n: 2,
        },
        ModelSpec::Likelihood {
            method: Method::Static,
            n: 10,
        },
        ModelSpec::Likelihood {
            method: Method::Static,
            n: 20,
        },
        ModelSpec::Likelihood {
            method: Method::Quantile,
            n: 10,
        },
        ModelSpec::Likelihood {
            method: Method::Quantile,
            n: 20,
        },
        ModelSpec::RandomForest {
            params: ForestParams::default(),
        },
        ModelSpec::GradientBoosting {
            params: GbParams::default(),
        },
    ]
}

fn default_levels() -> Vec<f64> {
    vec![0.0, 0.01, 0.05, 0.10, 0.20, 0.50]
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}

fn default_alpha() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: 0.2,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset_name: String,
    pub source: DatasetSource,
    #[serde(default = "default_roster")]
    pub roster: Vec<ModelSpec>,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub split: SplitConfig,
    /// Additive smoothing for the likelihood classifier tables.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Class treated as positive for precision/recall; class id 1 if unset.
    #[serde(default)]
    pub positive_label: Option<String>,
    #[serde(default)]
    pub stability: StabilityOptions,
}

impl ExperimentConfig {
    pub fn new(dataset_name: impl Into<String>, source: DatasetSource) -> Self {
        ExperimentConfig {
            dataset_name: dataset_name.into(),
            source,
            roster: default_roster(),
            levels: default_levels(),
            seeds: default_seeds(),
            split: SplitConfig::default(),
            alpha: default_alpha(),
            positive_label: None,
            stability: StabilityOptions::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.roster.is_empty() {
            return Err(Error::InvalidInput("empty model roster".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidInput("need at least one seed".into()));
        }
        if self.levels.is_empty() {
            return Err(Error::InvalidInput("need at least one level".into()));
        }
        for w in self.levels.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidInput(
                    "levels must be strictly ascending".into(),
                ));
            }
        }
        if self
            .levels
            .iter()
            .any(|&l| !(0.0..=1.0).contains(&l))
        {
            return Err(Error::InvalidInput("levels must lie in [0, 1]".into()));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidInput("alpha must be >= 0".into()));
        }
        Ok(())
    }
}

/// Metrics for one successful grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub confusion: ConfusionCounts,
    pub balanced_accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub importances: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellOutcome {
    Ok(CellMetrics),
    Failed { error: String },
}

/// One `(model, level, seed)` cell of the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub model: String,
    pub level: f64,
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: CellOutcome,
}

impl Cell {
    pub fn metrics(&self) -> Option<&CellMetrics> {
        match &self.outcome {
            CellOutcome::Ok(m) => Some(m),
            CellOutcome::Failed { .. } => None,
        }
    }
}

/// Abstraction-choice experiment: every roster abstraction setting evaluated
/// on complete data (missingness forced to level 0).
pub fn run_abstraction_comparison(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let n_methods = config.roster.iter().filter(|m| m.is_likelihood()).count();
    if n_methods < 2 {
        return Err(Error::InvalidInput(
            "abstraction comparison needs at least 2 abstraction settings in the roster".into(),
        ));
    }
    let mut cfg = config.clone();
    cfg.roster.retain(|m| m.is_likelihood());
    cfg.levels = vec![0.0];
    let cells = run_grid(&cfg)?;
    report::assemble("abstractions", &cfg, cells, None)
}

/// Missing-data sweep: every roster model at every missingness level.
pub fn run_missing_sweep(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if !config.levels.contains(&0.0) {
        return Err(Error::InvalidInput(
            "sweep levels must include 0 (the reference level)".into(),
        ));
    }
    let cells = run_grid(config)?;
    report::assemble("sweep", config, cells, None)
}

/// Stability experiment: the sweep plus significance traces per
/// `(model, feature)` and a stability summary per model.
pub fn run_stability_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if !config.levels.contains(&0.0) {
        return Err(Error::InvalidInput(
            "stability levels must include 0 (the reference level)".into(),
        ));
    }
    let cells = run_grid(config)?;
    let dataset = load_dataset(&config.source)?;
    let feature_names: Vec<String> = dataset.feature_names().to_vec();
    let stability = build_stability(config, &cells, &feature_names)?;
    report::assemble("stability", config, cells, Some(stability))
}

pub(crate) struct StabilityBlock {
    pub traces: Vec<SignificanceTrace>,
    pub summaries: Vec<ModelStability>,
}

fn build_stability(
    config: &ExperimentConfig,
    cells: &[Cell],
    feature_names: &[String],
) -> Result<StabilityBlock> {
    let mut traces = Vec::new();
    let mut summaries = Vec::new();
    for model in &config.roster {
        let name = model.name();
        let mut model_traces = Vec::with_capacity(feature_names.len());
        let mut complete = true;
        'features: for (k, feature) in feature_names.iter().enumerate() {
            let mut points = Vec::with_capacity(config.levels.len());
            for &level in &config.levels {
                let values: Vec<f64> = cells
                    .iter()
                    .filter(|c| c.model == name && c.level == level)
                    .filter_map(|c| c.metrics())
                    .map(|m| m.importances[k])
                    .collect();
                if values.is_empty() {
                    complete = false;
                    break 'features;
                }
                points.push((level, values.iter().sum::<f64>() / values.len() as f64));
            }
            model_traces.push(SignificanceTrace::new(name.clone(), feature.clone(), points));
        }
        if !complete {
            // Every seed failed for some (model, level); the trace set is
            // unusable and the failure is already recorded in the cells.
            continue;
        }
        let summary = stability_summary(&model_traces, &config.stability)?;
        traces.extend(model_traces);
        summaries.push(ModelStability {
            model: name,
            summary,
        });
    }
    Ok(StabilityBlock { traces, summaries })
}

/// Pre-materialized data for one (seed, level) grid slice.
struct LevelData {
    train: Arc<Dataset>,
    test: Arc<Dataset>,
}

fn run_grid(config: &ExperimentConfig) -> Result<Vec<Cell>> {
    config.validate()?;
    let dataset = load_dataset(&config.source)?;
    if dataset.n_classes() != 2 {
        return Err(Error::InvalidInput(format!(
            "experiments evaluate binary tasks; dataset has {} classes",
            dataset.n_classes()
        )));
    }
    let positive = match &config.positive_label {
        None => 1,
        Some(label) => dataset
            .class_names()
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| {
                Error::InvalidInput(format!("positive label '{label}' not among classes"))
            })?,
    };

    // Split once per seed; inject each level independently from that split,
    // never from another level's output.
    let mut slices: Vec<Vec<LevelData>> = Vec::with_capacity(config.seeds.len());
    for &seed_value in &config.seeds {
        let (train, test) = split(
            &dataset,
            &SplitSpec {
                test_fraction: config.split.test_fraction,
                seed: seed_value,
                stratified: config.split.stratified,
            },
        )?;
        let mut per_level = Vec::with_capacity(config.levels.len());
        for (level_idx, &level) in config.levels.iter().enumerate() {
            let train_spec = MissingnessSpec {
                fraction: level,
                seed: seed::derive(seed_value, &[tag::INJECT_TRAIN, level_idx as u64]),
            };
            let test_spec = MissingnessSpec {
                fraction: level,
                seed: seed::derive(seed_value, &[tag::INJECT_TEST, level_idx as u64]),
            };
            per_level.push(LevelData {
                train: Arc::new(inject_missing(&train, &train_spec)?),
                test: Arc::new(inject_missing(&test, &test_spec)?),
            });
        }
        slices.push(per_level);
    }

    struct Job<'a> {
        seed_idx: usize,
        level_idx: usize,
        model: &'a ModelSpec,
        model_idx: usize,
    }
    let mut jobs = Vec::new();
    for seed_idx in 0..config.seeds.len() {
        for level_idx in 0..config.levels.len() {
            for (model_idx, model) in config.roster.iter().enumerate() {
                jobs.push(Job {
                    seed_idx,
                    level_idx,
                    model,
                    model_idx,
                });
            }
        }
    }

    let run_job = |job: &Job| -> Cell {
        let seed_value = config.seeds[job.seed_idx];
        let data = &slices[job.seed_idx][job.level_idx];
        let fit_seed = seed::derive(seed_value, &[tag::MODEL_FIT, job.model_idx as u64]);
        let outcome = match run_cell(
            job.model,
            &data.train,
            &data.test,
            config.alpha,
            positive,
            fit_seed,
        ) {
            Ok(metrics) => CellOutcome::Ok(metrics),
            Err(e) => CellOutcome::Failed {
                error: e.to_string(),
            },
        };
        Cell {
            model: job.model.name(),
            level: config.levels[job.level_idx],
            seed: seed_value,
            outcome,
        }
    };

    let cells: Vec<Cell> = match worker_override() {
        Some(workers) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Report(format!("worker pool: {e}")))?;
            pool.install(|| jobs.par_iter().map(run_job).collect())
        }
        None => jobs.par_iter().map(run_job).collect(),
    };
    Ok(cells)
}

fn worker_override() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
}

fn run_cell(
    model: &ModelSpec,
    train: &Dataset,
    test: &Dataset,
    alpha: f64,
    positive: usize,
    fit_seed: u64,
) -> Result<CellMetrics> {
    let mut warnings: Vec<String> = Vec::new();
    let (predictions, importances) = match model {
        ModelSpec::Likelihood { method, n } => {
            let schemes = abstraction::fit_all(train, *method, *n)?;
            for cs in &schemes.schemes {
                for w in &cs.warnings {
                    warnings.push(format!("{}: {}", cs.column, w));
                }
            }
            let abstracted_train = schemes.apply(train)?;
            let abstracted_test = schemes.apply(test)?;
            let classifier = ClassModel::fit(&abstracted_train, alpha)?;
            let (predictions, unseen) = classifier.predict_batch(&abstracted_test)?;
            if unseen > 0 {
                warnings.push(format!("{unseen} unseen categories skipped at predict time"));
            }
            (predictions, classifier.mean_feature_ranks())
        }
        ModelSpec::RandomForest { params } => {
            let imputer = Imputer::fit(train)?;
            let train_table = NumericTable::from_complete(&imputer.apply(train)?)?;
            let test_table = NumericTable::from_complete(&imputer.apply(test)?)?;
            let forest = fit_forest(
                &train_table,
                train.labels(),
                train.n_classes(),
                params,
                fit_seed,
            )?;
            (
                forest.predict_batch(&test_table),
                forest.feature_importances().to_vec(),
            )
        }
        ModelSpec::GradientBoosting { params } => {
            let imputer = Imputer::fit(train)?;
            let train_table = NumericTable::from_complete(&imputer.apply(train)?)?;
            let test_table = NumericTable::from_complete(&imputer.apply(test)?)?;
            let booster = fit_gb(&train_table, train.labels(), params, fit_seed)?;
            (
                booster.predict_batch(&test_table),
                booster.feature_importances().to_vec(),
            )
        }
    };

    let counts = confusion(&predictions, test.labels(), positive)?;
    let balanced = match balanced_accuracy(&counts) {
        Ok(v) => Some(v),
        Err(e) => {
            warnings.push(e.to_string());
            None
        }
    };
    Ok(CellMetrics {
        confusion: counts,
        balanced_accuracy: balanced,
        precision: precision(&counts),
        recall: recall(&counts),
        importances,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(
            "synthetic-tiny",
            DatasetSource::Synthetic {
                spec: SyntheticSpec {
                    n_rows: 120,
                    n_features: 4,
                    n_informative: 2,
                    class_separation: 2.0,
                    seed: 99,
                },
            },
        );
        cfg.roster = vec![
            ModelSpec::Likelihood {
                method: Method::Quantile,
                n: 4,
            },
            ModelSpec::Likelihood {
                method: Method::Static,
                n: 4,
            },
            ModelSpec::RandomForest {
                params: ForestParams {
                    n_trees: 5,
                    ..Default::default()
                },
            },
        ];
        cfg.levels = vec![0.0, 0.2];
        cfg.seeds = vec![1, 2];
        cfg
    }

    #[test]
    fn sweep_produces_a_full_grid() {
        let cfg = synth_config();
        let report = run_missing_sweep(&cfg).unwrap();
        assert_eq!(report.cells.len(), 3 * 2 * 2);
        assert_eq!(report.n_failures, 0);
        for cell in &report.cells {
            let m = cell.metrics().expect("all cells succeed here");
            assert_eq!(m.confusion.total(), 24); // 20% of 120
            assert_eq!(m.importances.len(), 4);
        }
    }

    #[test]
    fn sweep_requires_level_zero() {
        let mut cfg = synth_config();
        cfg.levels = vec![0.1, 0.2];
        assert!(run_missing_sweep(&cfg).is_err());
    }

    #[test]
    fn level_zero_equals_plain_run() {
        // Injection at fraction 0 is the identity, so a sweep's level-0 row
        // must match a single-level run.
        let mut cfg = synth_config();
        let sweep = run_missing_sweep(&cfg).unwrap();
        cfg.levels = vec![0.0];
        let plain = run_missing_sweep(&cfg).unwrap();
        for cell in plain.cells.iter() {
            let matching = sweep
                .cells
                .iter()
                .find(|c| c.model == cell.model && c.seed == cell.seed && c.level == 0.0)
                .unwrap();
            assert_eq!(cell.metrics(), matching.metrics());
        }
    }

    #[test]
    fn abstraction_comparison_forces_level_zero_and_filters_roster() {
        let cfg = synth_config();
        let report = run_abstraction_comparison(&cfg).unwrap();
        assert!(report.cells.iter().all(|c| c.level == 0.0));
        assert!(report
            .cells
            .iter()
            .all(|c| c.model.starts_with("likelihood-")));
        // 2 abstraction settings x 1 level x 2 seeds.
        assert_eq!(report.cells.len(), 4);
    }

    #[test]
    fn abstraction_comparison_needs_two_methods() {
        let mut cfg = synth_config();
        cfg.roster = vec![ModelSpec::Likelihood {
            method: Method::Quantile,
            n: 4,
        }];
        assert!(run_abstraction_comparison(&cfg).is_err());
    }

    #[test]
    fn stability_report_has_traces_and_summaries() {
        let mut cfg = synth_config();
        cfg.levels = vec![0.0, 0.1, 0.2];
        let report = run_stability_experiment(&cfg).unwrap();
        // One trace per (model, feature).
        assert_eq!(report.traces.len(), 3 * 4);
        assert_eq!(report.stability.len(), 3);
        for trace in &report.traces {
            assert_eq!(trace.points.len(), 3);
            assert!(trace.importance_at(0.0).is_some());
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = synth_config();
        let a = run_missing_sweep(&cfg).unwrap();
        let b = run_missing_sweep(&cfg).unwrap();
        assert_eq!(a.cells, b.cells);
        assert_eq!(a.config_hash, b.config_hash);
    }

    #[test]
    fn config_validation_rejects_bad_levels() {
        let mut cfg = synth_config();
        cfg.levels = vec![0.0, 0.2, 0.1];
        assert!(run_missing_sweep(&cfg).is_err());
        cfg.levels = vec![0.0, 1.5];
        assert!(run_missing_sweep(&cfg).is_err());
        cfg.levels = vec![0.0];
        cfg.seeds.clear();
        assert!(run_missing_sweep(&cfg).is_err());
    }
}
