//! `stabular` — abstraction-based tabular classification from the command
//! line: fit discretization schemes, train and apply the likelihood
//! classifier and the tree-ensemble baselines, and run the benchmark
//! experiments.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use stabular::abstraction::{self, Method, SchemeSet};
use stabular::baselines::{fit_forest, fit_gb, EnsembleModel, ForestParams, GbParams, Imputer, NumericTable};
use stabular::classifier::ClassModel;
use stabular::data::{generate_synthetic, load_csv, write_csv, ColumnKind, CsvOptions, Dataset, SyntheticSpec};
use stabular::harness::{
    emit_report, run_abstraction_comparison, run_missing_sweep, run_stability_experiment,
    ExperimentConfig, ExperimentReport,
};

#[derive(Parser)]
#[command(name = "stabular", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic binary-classification CSV.
    Synth(SynthArgs),
    /// Fit per-column abstraction schemes on a CSV and save them as JSON.
    Abstract(AbstractArgs),
    /// Train the likelihood classifier from a CSV plus fitted schemes.
    Train(TrainArgs),
    /// Predict labels for a CSV with a trained model and its schemes.
    Predict(PredictArgs),
    /// Print feature ranks of a trained model (CSV to stdout or a file).
    Rank(RankArgs),
    /// Train a tree-ensemble baseline.
    Baseline(BaselineArgs),
    /// Run benchmark experiments from a JSON config.
    Bench(BenchArgs),
}

#[derive(Args)]
struct CsvInput {
    /// Input CSV path.
    #[arg(long = "in")]
    input: PathBuf,
    /// Name of the label column.
    #[arg(long)]
    label_column: String,
    /// Cell values treated as missing (repeatable); empty cells always are.
    #[arg(long = "sentinel")]
    sentinels: Vec<String>,
    /// Force a column numeric (repeatable).
    #[arg(long = "numeric")]
    numeric: Vec<String>,
    /// Force a column categorical (repeatable).
    #[arg(long = "categorical")]
    categorical: Vec<String>,
}

impl CsvInput {
    fn load(&self) -> Result<Dataset> {
        let mut opts = CsvOptions::new(&self.label_column);
        for s in &self.sentinels {
            if !opts.missing_sentinels.contains(s) {
                opts.missing_sentinels.push(s.clone());
            }
        }
        let mut overrides = BTreeMap::new();
        for c in &self.numeric {
            overrides.insert(c.clone(), ColumnKind::Numeric);
        }
        for c in &self.categorical {
            overrides.insert(c.clone(), ColumnKind::Categorical);
        }
        opts.kind_overrides = overrides;
        load_csv(&self.input, &opts)
            .with_context(|| format!("loading {}", self.input.display()))
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    features: usize,
    #[arg(long, default_value_t = 1)]
    informative: usize,
    #[arg(long, default_value_t = 2.0)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Label column name in the emitted CSV.
    #[arg(long, default_value = "label")]
    label_column: String,
}

#[derive(Args)]
struct AbstractArgs {
    #[command(flatten)]
    csv: CsvInput,
    /// Abstraction method.
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Number of categories (ignored for roc, which always yields 2).
    #[arg(long, default_value_t = 10)]
    n: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    Roc,
    Static,
    Quantile,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Roc => Method::Roc,
            MethodArg::Static => Method::Static,
            MethodArg::Quantile => Method::Quantile,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    csv: CsvInput,
    /// Fitted schemes JSON produced by `abstract`.
    #[arg(long)]
    schemes: PathBuf,
    /// Additive smoothing for the probability tables.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    csv: CsvInput,
    #[arg(long)]
    schemes: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Output CSV of predictions; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(subcommand)]
    command: BaselineCommand,
}

#[derive(Subcommand)]
enum BaselineCommand {
    /// Train a random forest or gradient boosting model.
    Train(BaselineTrainArgs),
}

#[derive(Args)]
struct BaselineTrainArgs {
    #[command(flatten)]
    csv: CsvInput,
    /// Which baseline to train.
    #[arg(long, value_enum)]
    model: BaselineKind,
    #[arg(long, default_value_t = 100)]
    n_trees: usize,
    /// Maximum tree depth; unlimited for rf when omitted, 3 for gb.
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 1)]
    min_samples_leaf: usize,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum BaselineKind {
    Rf,
    Gb,
}

#[derive(Args)]
struct BenchArgs {
    #[command(subcommand)]
    experiment: BenchExperiment,
}

#[derive(Subcommand)]
enum BenchExperiment {
    /// Compare abstraction settings on complete data.
    Abstractions(BenchRunArgs),
    /// Sweep metrics over missing-data levels.
    Sweep(BenchRunArgs),
    /// Feature-significance stability across missing-data levels.
    Stability(BenchRunArgs),
}

#[derive(Args)]
struct BenchRunArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report artifacts.
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    /// Override the config's seed list.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Override the config's missingness levels.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    levels: Vec<f64>,
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Synth(args) => synth(args),
        Command::Abstract(args) => abstract_cmd(args),
        Command::Train(args) => train(args),
        Command::Predict(args) => predict(args),
        Command::Rank(args) => rank(args),
        Command::Baseline(args) => match args.command {
            BaselineCommand::Train(t) => baseline_train(t),
        },
        Command::Bench(args) => bench(args),
    }
}

fn synth(args: SynthArgs) -> Result<()> {
    let ds = generate_synthetic(&SyntheticSpec {
        n_rows: args.rows,
        n_features: args.features,
        n_informative: args.informative,
        class_separation: args.separation,
        seed: args.seed,
    })?;
    write_csv(&ds, &args.out, &args.label_column)?;
    println!(
        "wrote {} rows x {} features to {}",
        ds.n_rows(),
        ds.n_features(),
        args.out.display()
    );
    Ok(())
}

fn abstract_cmd(args: AbstractArgs) -> Result<()> {
    let ds = args.csv.load()?;
    let set = abstraction::fit_all(&ds, args.method.into(), args.n)?;
    set.save(&args.out)?;
    let n_warnings: usize = set.schemes.iter().map(|s| s.warnings.len()).sum();
    println!(
        "fitted {} schemes ({} warnings) -> {}",
        set.len(),
        n_warnings,
        args.out.display()
    );
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let ds = args.csv.load()?;
    let schemes = SchemeSet::load(&args.schemes)?;
    let abstracted = schemes.apply(&ds)?;
    let model = ClassModel::fit(&abstracted, args.alpha)?;
    model.save(&args.out)?;
    println!(
        "trained on {} rows ({} classes) -> {}",
        ds.n_rows(),
        model.n_classes(),
        args.out.display()
    );
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    let ds = args.csv.load()?;
    let schemes = SchemeSet::load(&args.schemes)?;
    let model = ClassModel::load(&args.model)?;
    let abstracted = schemes.apply(&ds)?;
    let (predictions, unseen) = model.predict_batch(&abstracted)?;
    if unseen > 0 {
        eprintln!("note: {unseen} unseen categories were skipped");
    }

    let mut w: csv::Writer<Box<dyn std::io::Write>> = match &args.out {
        Some(p) => csv::Writer::from_writer(Box::new(std::fs::File::create(p)?)),
        None => csv::Writer::from_writer(Box::new(std::io::stdout())),
    };
    w.write_record(["row", "prediction"])?;
    for (i, p) in predictions.iter().enumerate() {
        w.write_record([format!("{i}"), model.class_names()[*p].clone()])?;
    }
    w.flush()?;
    Ok(())
}

fn rank(args: RankArgs) -> Result<()> {
    let model = ClassModel::load(&args.model)?;
    let report = model.rank_report();
    let mut w: csv::Writer<Box<dyn std::io::Write>> = match &args.out {
        Some(p) => csv::Writer::from_writer(Box::new(std::fs::File::create(p)?)),
        None => csv::Writer::from_writer(Box::new(std::io::stdout())),
    };
    w.write_record(["feature", "mean_rank"])?;
    let mut rows: Vec<(&String, f64)> = report
        .feature_names
        .iter()
        .zip(report.mean_per_feature.iter().copied())
        .collect();
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    for (name, rank) in rows {
        w.write_record([name.clone(), format!("{rank}")])?;
    }
    w.flush()?;
    Ok(())
}

fn baseline_train(args: BaselineTrainArgs) -> Result<()> {
    let ds = args.csv.load()?;
    let imputer = Imputer::fit(&ds)?;
    let table = NumericTable::from_complete(&imputer.apply(&ds)?)?;
    let model = match args.model {
        BaselineKind::Rf => {
            let params = ForestParams {
                n_trees: args.n_trees,
                max_depth: args.max_depth,
                min_samples_leaf: args.min_samples_leaf,
                ..Default::default()
            };
            EnsembleModel::Forest(fit_forest(
                &table,
                ds.labels(),
                ds.n_classes(),
                &params,
                args.seed,
            )?)
        }
        BaselineKind::Gb => {
            let params = GbParams {
                n_trees: args.n_trees,
                learning_rate: args.learning_rate,
                max_depth: args.max_depth.unwrap_or(3),
                min_samples_leaf: args.min_samples_leaf,
            };
            EnsembleModel::Boosted(fit_gb(&table, ds.labels(), &params, args.seed)?)
        }
    };
    model.save(&args.out)?;
    println!("trained baseline -> {}", args.out.display());
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let (run_args, runner): (&BenchRunArgs, fn(&ExperimentConfig) -> stabular::Result<ExperimentReport>) =
        match &args.experiment {
            BenchExperiment::Abstractions(a) => (a, run_abstraction_comparison),
            BenchExperiment::Sweep(a) => (a, run_missing_sweep),
            BenchExperiment::Stability(a) => (a, run_stability_experiment),
        };

    let text = std::fs::read_to_string(&run_args.config)
        .with_context(|| format!("reading {}", run_args.config.display()))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", run_args.config.display()))?;
    if !run_args.seeds.is_empty() {
        config.seeds = run_args.seeds.clone();
    }
    if !run_args.levels.is_empty() {
        config.levels = run_args.levels.clone();
    }

    let report = runner(&config)?;
    let files = emit_report(&report, &run_args.out)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    println!(
        "{}: {} cells, {} failures",
        report.experiment,
        report.cells.len(),
        report.n_failures
    );
    if report.n_failures > 0 {
        bail!("{} grid cells failed; see report for details", report.n_failures);
    }
    Ok(())
}
