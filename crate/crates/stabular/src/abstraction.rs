//! Per-feature abstraction: maps raw values into a small set of integer
//! categories. Three schemes are provided — a two-category split maximizing
//! the gap between class-conditional empirical CDFs, equal-width binning, and
//! equal-population (quantile) binning — plus a statistical upper bound on
//! how many categories a dataset of a given size can support.
//!
//! Fitting uses observed training cells only; `transform` never fills gaps:
//! missing stays missing.

use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnKind, ColumnValues, Dataset};
use crate::error::{Error, Result};

/// Two-category split at the threshold maximizing
/// `phi(x) = |F1(x) - F2(x)|` over the class-conditional empirical CDFs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSplitScheme {
    pub threshold: f64,
    /// Set when `max phi = 0` (identical class distributions); the threshold
    /// then falls back to the median of all observed values.
    pub degenerate: bool,
    pub phi_at_threshold: f64,
}

/// Equal-width binning of the observed training range; out-of-range values
/// clamp into the edge bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticBinScheme {
    pub min: f64,
    pub max: f64,
    pub n_bins: u32,
    pub width: f64,
}

/// Equal-population binning at nearest-rank empirical quantile cutoffs.
/// Duplicate cutoffs (heavy ties in the data) are merged, shrinking the
/// effective category count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileScheme {
    /// Strictly increasing after merging.
    pub cutoffs: Vec<f64>,
    pub n_requested: u32,
    pub n_effective: u32,
}

/// Pass-through for natively categorical columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityScheme {
    pub n_categories: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "parameters", rename_all = "lowercase")]
pub enum Scheme {
    Roc(RocSplitScheme),
    Static(StaticBinScheme),
    Quantile(QuantileScheme),
    Identity(IdentityScheme),
}

impl Scheme {
    /// Size of the category universe this scheme can emit.
    pub fn n_categories(&self) -> u32 {
        match self {
            Scheme::Roc(_) => 2,
            Scheme::Static(s) => s.n_bins,
            Scheme::Quantile(s) => s.cutoffs.len() as u32 + 1,
            Scheme::Identity(s) => s.n_categories,
        }
    }

    /// Map one numeric cell to its category; missing passes through.
    /// Total on fitted schemes — every finite value lands in a category.
    pub fn transform(&self, cell: Option<f64>) -> Option<u32> {
        let value = cell?;
        Some(match self {
            Scheme::Roc(s) => u32::from(value > s.threshold),
            Scheme::Static(s) => {
                let bin = ((value - s.min) / s.width).floor();
                let clamped = bin.clamp(0.0, (s.n_bins - 1) as f64);
                clamped as u32
            }
            Scheme::Quantile(s) => s.cutoffs.iter().filter(|&&c| c < value).count() as u32,
            Scheme::Identity(_) => {
                panic!("identity schemes transform categorical cells, not numeric ones")
            }
        })
    }
}

/// Sorted copy of the values with basic sanity checks shared by the fitters.
fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("observed cells are finite"));
    v
}

fn distinct_count(sorted: &[f64]) -> usize {
    let mut n = 0;
    let mut prev = f64::NAN;
    for &x in sorted {
        if x != prev {
            n += 1;
            prev = x;
        }
    }
    n
}

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

/// Fit the CDF-gap split on observed `(value, label)` pairs of a binary task.
///
/// Candidate thresholds are midpoints between consecutive distinct sorted
/// values; ties among maximizers break toward the smallest candidate.
pub fn fit_roc_split(values: &[f64], labels: &[usize]) -> Result<RocSplitScheme> {
    if values.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} values vs {} labels",
            values.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Fit(format!(
            "CDF-gap split requires binary class ids, got {bad}"
        )));
    }
    let n1 = labels.iter().filter(|&&l| l == 0).count();
    let n2 = labels.len() - n1;
    if n1 == 0 || n2 == 0 {
        return Err(Error::Fit(
            "CDF-gap split needs at least one observed value per class".into(),
        ));
    }

    let mut pairs: Vec<(f64, usize)> = values.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));

    // Sweep the sorted values, evaluating phi at each gap between distinct
    // values. Counts are exact integers; phi is recomputed from them at every
    // candidate so results match an exhaustive oracle bit for bit.
    let mut best_phi = 0.0f64;
    let mut best_threshold = None;
    let mut c1 = 0usize;
    let mut c2 = 0usize;
    for i in 0..pairs.len() {
        match pairs[i].1 {
            0 => c1 += 1,
            _ => c2 += 1,
        }
        let at_gap = i + 1 < pairs.len() && pairs[i + 1].0 > pairs[i].0;
        if !at_gap {
            continue;
        }
        let phi = (c1 as f64 / n1 as f64 - c2 as f64 / n2 as f64).abs();
        if phi > best_phi {
            best_phi = phi;
            best_threshold = Some(0.5 * (pairs[i].0 + pairs[i + 1].0));
        }
    }

    match best_threshold {
        Some(threshold) if best_phi > 0.0 => Ok(RocSplitScheme {
            threshold,
            degenerate: false,
            phi_at_threshold: best_phi,
        }),
        _ => {
            let all = sorted(values);
            Ok(RocSplitScheme {
                threshold: median(&all),
                degenerate: true,
                phi_at_threshold: 0.0,
            })
        }
    }
}

/// Fit equal-width bins over the observed range.
pub fn fit_static_bins(values: &[f64], n_bins: u32) -> Result<StaticBinScheme> {
    if n_bins < 2 {
        return Err(Error::InvalidInput(format!(
            "equal-width binning needs n_bins >= 2, got {n_bins}"
        )));
    }
    let v = sorted(values);
    if distinct_count(&v) < 2 {
        return Err(Error::Fit(
            "all observed values are equal; range is zero".into(),
        ));
    }
    let min = v[0];
    let max = v[v.len() - 1];
    Ok(StaticBinScheme {
        min,
        max,
        n_bins,
        width: (max - min) / n_bins as f64,
    })
}

/// Fit equal-population bins: cutoffs are the nearest-rank empirical
/// quantiles at `q = k/n` for `k = 1..n-1`. Returns the scheme plus warnings
/// (fewer observed values than bins, merged duplicate cutoffs).
pub fn fit_quantile_bins(values: &[f64], n: u32) -> Result<(QuantileScheme, Vec<String>)> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "quantile binning needs n >= 2, got {n}"
        )));
    }
    let v = sorted(values);
    if distinct_count(&v) < 2 {
        return Err(Error::Fit(
            "fewer than 2 distinct observed values".into(),
        ));
    }
    let m = v.len();
    let mut warnings = Vec::new();
    if m < n as usize {
        warnings.push(format!(
            "{m} observed values for {n} bins; bins cannot be equally populated"
        ));
    }

    // Nearest-rank quantile: the ceil(q*m)-th smallest value, computed in
    // integer arithmetic to keep ranks exact.
    let mut cutoffs: Vec<f64> = (1..n as usize)
        .map(|k| {
            let rank = (k * m).div_ceil(n as usize);
            v[rank - 1]
        })
        .collect();
    let before = cutoffs.len();
    cutoffs.dedup();
    if cutoffs.len() < before {
        warnings.push(format!(
            "{} duplicate cutoffs merged; {} effective categories",
            before - cutoffs.len(),
            cutoffs.len() + 1
        ));
    }
    Ok((
        QuantileScheme {
            n_requested: n,
            n_effective: cutoffs.len() as u32 + 1,
            cutoffs,
        },
        warnings,
    ))
}

/// Which scheme `fit_all` fits for numeric columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Roc,
    Static,
    Quantile,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Roc => write!(f, "roc"),
            Method::Static => write!(f, "static"),
            Method::Quantile => write!(f, "quantile"),
        }
    }
}

/// A fitted scheme for one column, with any fit-time warnings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScheme {
    pub column: String,
    #[serde(flatten)]
    pub scheme: Scheme,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Fitted schemes for every feature of a dataset, in feature order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSet {
    version: u32,
    pub schemes: Vec<ColumnScheme>,
}

const SCHEME_SET_VERSION: u32 = 1;

impl SchemeSet {
    pub fn len(&self) -> usize {
        self.schemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemes.is_empty()
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let set: SchemeSet =
            serde_json::from_str(&text).map_err(|e| Error::ModelFile(e.to_string()))?;
        if set.version != SCHEME_SET_VERSION {
            return Err(Error::ModelFile(format!(
                "scheme file version {} unsupported (reader is {})",
                set.version, SCHEME_SET_VERSION
            )));
        }
        Ok(set)
    }

    /// Apply the fitted schemes column-by-column, producing an all-categorical
    /// dataset. Missing cells stay missing.
    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        if self.schemes.len() != dataset.n_features() {
            return Err(Error::InvalidInput(format!(
                "{} schemes for {} features",
                self.schemes.len(),
                dataset.n_features()
            )));
        }
        let columns = dataset
            .columns()
            .iter()
            .zip(&self.schemes)
            .map(|(col, cs)| transform_column(col, &cs.scheme))
            .collect::<Result<Vec<_>>>()?;
        dataset.with_columns(columns)
    }
}

fn transform_column(col: &Column, scheme: &Scheme) -> Result<Column> {
    match (&col.values, scheme) {
        (ColumnValues::Numeric(values), _) => {
            let codes: Vec<u32> = values
                .iter()
                .zip(&col.mask)
                .map(|(&x, &m)| scheme.transform(m.then_some(x)).unwrap_or(0))
                .collect();
            Ok(Column::categorical(
                codes,
                scheme.n_categories(),
                col.mask.clone(),
            ))
        }
        (ColumnValues::Categorical { .. }, Scheme::Identity(_)) => Ok(col.clone()),
        (ColumnValues::Categorical { .. }, _) => Err(Error::InvalidInput(
            "numeric scheme applied to a categorical column".into(),
        )),
    }
}

/// Fit one scheme per feature on observed training cells. Natively
/// categorical columns pass through unchanged; for `Method::Roc` the dataset
/// must be binary-labeled.
pub fn fit_all(dataset: &Dataset, method: Method, n: u32) -> Result<SchemeSet> {
    if method == Method::Roc && dataset.n_classes() != 2 {
        return Err(Error::Fit(format!(
            "CDF-gap abstraction requires a binary task; dataset has {} classes",
            dataset.n_classes()
        )));
    }
    let mut schemes = Vec::with_capacity(dataset.n_features());
    for (k, col) in dataset.columns().iter().enumerate() {
        let name = dataset.feature_name(k).to_string();
        let (scheme, warnings) = match col.kind() {
            ColumnKind::Categorical => {
                let n_categories = match &col.values {
                    ColumnValues::Categorical { n_categories, .. } => *n_categories,
                    _ => unreachable!(),
                };
                (Scheme::Identity(IdentityScheme { n_categories }), Vec::new())
            }
            ColumnKind::Numeric => {
                let mut values = Vec::with_capacity(col.len());
                let mut labels = Vec::with_capacity(col.len());
                for i in 0..col.len() {
                    if let Some(x) = col.numeric_at(i) {
                        values.push(x);
                        labels.push(dataset.labels()[i]);
                    }
                }
                let fitted = match method {
                    Method::Roc => {
                        fit_roc_split(&values, &labels).map(|s| (Scheme::Roc(s), Vec::new()))
                    }
                    Method::Static => {
                        fit_static_bins(&values, n).map(|s| (Scheme::Static(s), Vec::new()))
                    }
                    Method::Quantile => {
                        fit_quantile_bins(&values, n).map(|(s, w)| (Scheme::Quantile(s), w))
                    }
                };
                fitted.map_err(|e| Error::column_fit(&name, e.to_string()))?
            }
        };
        schemes.push(ColumnScheme {
            column: name,
            scheme,
            warnings,
        });
    }
    Ok(SchemeSet {
        version: SCHEME_SET_VERSION,
        schemes,
    })
}

/// Statistical ceiling on the number of categories a dataset can support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbstractionBudget {
    pub n_classes: u32,
    pub population: u64,
    pub resolution: f64,
    pub confidence: f64,
    pub n_max: u64,
}

impl AbstractionBudget {
    pub fn new(n_classes: u32, population: u64, resolution: f64, confidence: f64) -> Result<Self> {
        let n_max = max_abstractions(n_classes, population, resolution, confidence)?;
        Ok(AbstractionBudget {
            n_classes,
            population,
            resolution,
            confidence,
            n_max,
        })
    }
}

/// Upper limit on the number of abstractions:
/// `floor(c^2 R^2 N / ((c-1) z^2))`, at minimum 1.
///
/// Derived from requiring the sampling noise of a per-bin class-probability
/// estimate (binomial std at uniform p = 1/c with N/n items per bin) to stay
/// below the target resolution `R` at confidence multiplier `z`.
pub fn max_abstractions(
    n_classes: u32,
    population: u64,
    resolution: f64,
    confidence: f64,
) -> Result<u64> {
    if n_classes < 2 {
        return Err(Error::InvalidInput("need at least 2 classes".into()));
    }
    if population < 1 {
        return Err(Error::InvalidInput("population must be positive".into()));
    }
    if !(resolution > 0.0) || !(confidence > 0.0) {
        return Err(Error::InvalidInput(
            "resolution and confidence must be positive".into(),
        ));
    }
    let c = n_classes as f64;
    let raw = c * c * resolution * resolution * population as f64
        / ((c - 1.0) * confidence * confidence);
    Ok((raw.floor() as u64).max(1))
}
