//! Classification metrics and the feature-significance stability measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }
}

/// Count TP/FP/TN/FN for a binary task.
pub fn confusion(
    predictions: &[usize],
    truth: &[usize],
    positive_class: usize,
) -> Result<ConfusionCounts> {
    if predictions.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions vs {} truth labels",
            predictions.len(),
            truth.len()
        )));
    }
    if positive_class > 1 {
        return Err(Error::InvalidInput(format!(
            "positive class {positive_class} is not a binary class id"
        )));
    }
    if let Some(&bad) = predictions.iter().chain(truth).find(|&&l| l > 1) {
        return Err(Error::InvalidInput(format!(
            "label {bad} is not binary (expected 0 or 1)"
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p == positive_class, t == positive_class) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, false) => c.true_neg += 1,
            (false, true) => c.false_neg += 1,
        }
    }
    Ok(c)
}

/// Balanced accuracy: the mean of the two per-class recalls. Errors when a
/// class is absent from the truth, which leaves one recall undefined.
pub fn balanced_accuracy(c: &ConfusionCounts) -> Result<f64> {
    let pos = c.true_pos + c.false_neg;
    let neg = c.true_neg + c.false_pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(
            "balanced accuracy needs both classes present in the truth".into(),
        ));
    }
    Ok((c.true_pos as f64 / pos as f64 + c.true_neg as f64 / neg as f64) / 2.0)
}

/// `TP / (TP + FN)`; `None` when no positive truth exists.
pub fn recall(c: &ConfusionCounts) -> Option<f64> {
    let den = c.true_pos + c.false_neg;
    (den > 0).then(|| c.true_pos as f64 / den as f64)
}

/// `TP / (TP + FP)`; `None` when nothing was predicted positive.
pub fn precision(c: &ConfusionCounts) -> Option<f64> {
    let den = c.true_pos + c.false_pos;
    (den > 0).then(|| c.true_pos as f64 / den as f64)
}

/// Importance of one feature in one model across missingness levels:
/// `points` maps each level `d` to the importance score at that level,
/// sorted ascending by level. The `d = 0` entry is mandatory for the
/// change measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceTrace {
    pub model: String,
    pub feature: String,
    pub points: Vec<(f64, f64)>,
}

impl SignificanceTrace {
    pub fn new(model: impl Into<String>, feature: impl Into<String>, mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite levels"));
        SignificanceTrace {
            model: model.into(),
            feature: feature.into(),
            points,
        }
    }

    pub fn importance_at(&self, level: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|(d, _)| *d == level)
            .map(|&(_, s)| s)
    }

    fn baseline(&self) -> Result<f64> {
        self.importance_at(0.0).ok_or_else(|| {
            Error::InvalidInput(format!(
                "trace ({}, {}) has no d = 0 entry",
                self.model, self.feature
            ))
        })
    }

    /// Keep only the levels at or below `max_level` (the `d = 0` point always
    /// survives).
    pub fn restricted(&self, max_level: f64) -> SignificanceTrace {
        SignificanceTrace {
            model: self.model.clone(),
            feature: self.feature.clone(),
            points: self
                .points
                .iter()
                .copied()
                .filter(|&(d, _)| d <= max_level)
                .collect(),
        }
    }
}

/// Relative feature significance change at level `d`:
/// `|S(d) - S(0)| / mean_d(S)`, where the mean runs over every level in the
/// trace, `d = 0` included. A trace with zero mean has not changed, so the
/// measure is 0 by definition there.
pub fn significance_change(trace: &SignificanceTrace, level: f64) -> Result<f64> {
    let baseline = trace.baseline()?;
    let at_level = trace.importance_at(level).ok_or_else(|| {
        Error::InvalidInput(format!(
            "trace ({}, {}) has no entry for level {level}",
            trace.model, trace.feature
        ))
    })?;
    let mean: f64 = trace.points.iter().map(|&(_, s)| s).sum::<f64>() / trace.points.len() as f64;
    if mean == 0.0 {
        return Ok(0.0);
    }
    Ok((at_level - baseline).abs() / mean)
}

/// How the change measures are aggregated into a summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    /// Levels above this are dropped from traces before anything is computed
    /// (both the per-level changes and the normalizing mean). The extreme
    /// 50% level is excluded by default: every method is unstable there and
    /// it would drown the trends at the moderate levels.
    pub max_level: Option<f64>,
    /// Whether the normalizing mean includes the `d = 0` entry.
    pub include_zero_in_mean: bool,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            max_level: Some(0.20),
            include_zero_in_mean: true,
        }
    }
}

/// Mean and population standard deviation of the significance change over
/// all features and all levels `d > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub mean: f64,
    pub std: f64,
    pub n_values: usize,
}

fn change_with_options(trace: &SignificanceTrace, level: f64, opts: &StabilityOptions) -> Result<f64> {
    let baseline = trace.baseline()?;
    let at_level = trace.importance_at(level).ok_or_else(|| {
        Error::InvalidInput(format!("no entry for level {level}"))
    })?;
    let denom_points: Vec<f64> = trace
        .points
        .iter()
        .filter(|&&(d, _)| opts.include_zero_in_mean || d > 0.0)
        .map(|&(_, s)| s)
        .collect();
    let mean: f64 = denom_points.iter().sum::<f64>() / denom_points.len() as f64;
    if mean == 0.0 {
        return Ok(0.0);
    }
    Ok((at_level - baseline).abs() / mean)
}

/// Aggregate all traces of one model. Every trace must share the same level
/// set and contain `d = 0`.
pub fn stability_summary(
    traces: &[SignificanceTrace],
    opts: &StabilityOptions,
) -> Result<StabilitySummary> {
    if traces.is_empty() {
        return Err(Error::InvalidInput("no traces to summarize".into()));
    }
    let level_set: Vec<f64> = traces[0].points.iter().map(|&(d, _)| d).collect();
    for t in traces {
        let levels: Vec<f64> = t.points.iter().map(|&(d, _)| d).collect();
        if levels != level_set {
            return Err(Error::InvalidInput(format!(
                "trace ({}, {}) has a different level set",
                t.model, t.feature
            )));
        }
    }

    let mut values = Vec::new();
    for trace in traces {
        let restricted = match opts.max_level {
            Some(max) => trace.restricted(max),
            None => trace.clone(),
        };
        for &(d, _) in &restricted.points {
            if d > 0.0 {
                values.push(change_with_options(&restricted, d, opts)?);
            }
        }
    }
    if values.is_empty() {
        return Err(Error::InvalidInput(
            "no levels above 0 survive the max_level filter".into(),
        ));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(StabilitySummary {
        mean,
        std: var.sqrt(),
        n_values: values.len(),
    })
}
