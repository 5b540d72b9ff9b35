//! Shared fixtures for the integration and acceptance suites.
//!
//! The benchmark battery mirrors the shapes and difficulty of four tabular
//! binary tasks. Real CSVs are used when present under `data/`; otherwise a
//! documented synthetic stand-in with the same shape and a comparable
//! difficulty profile is generated (correlated noisy views of a few latent
//! factors, class imbalance, and a wider-spread positive class — the
//! structure typical of measured signal data).

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use stabular::data::{write_csv, Column, Dataset};
use stabular::harness::DatasetSource;

/// Repository-level data directory (real dataset CSVs live here).
pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub struct LatentFixture {
    pub n_rows: usize,
    pub n_features: usize,
    pub n_factors: usize,
    /// Mean shift of the positive class's factors, in negative-class stds.
    pub mu: f64,
    /// Factor std of the positive class (negative class is 1).
    pub sigma: f64,
    /// Per-view noise std on top of the shared factor.
    pub tau: f64,
    pub positive_fraction: f64,
    pub seed: u64,
}

/// Generate a redundant-view binary dataset: each feature is a noisy view of
/// one of `n_factors` latent factors; the positive class shifts and widens
/// the factor distribution.
pub fn latent_fixture(spec: &LatentFixture) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_rows;
    let n_pos = (spec.positive_fraction * n as f64).round() as usize;
    let mut labels: Vec<usize> = (0..n).map(|i| usize::from(i >= n - n_pos)).collect();
    labels.shuffle(&mut rng);

    let mut factors = vec![vec![0.0f64; spec.n_factors]; n];
    for (i, row) in factors.iter_mut().enumerate() {
        for f in row.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *f = if labels[i] == 1 {
                spec.mu + spec.sigma * g
            } else {
                g
            };
        }
    }

    let mut columns = Vec::with_capacity(spec.n_features);
    let mut names = Vec::with_capacity(spec.n_features);
    for j in 0..spec.n_features {
        names.push(format!("f{j:02}"));
        let values: Vec<f64> = (0..n)
            .map(|i| {
                let noise: f64 = rng.sample(StandardNormal);
                factors[i][j % spec.n_factors] + spec.tau * noise
            })
            .collect();
        columns.push(Column::numeric(values, vec![true; n]));
    }
    Dataset::new(names, columns, labels, vec!["neg".into(), "pos".into()]).unwrap()
}

/// Shape-matched stand-in for the 351-row, 34-feature ionosphere task.
pub fn ionosphere_standin() -> LatentFixture {
    LatentFixture {
        n_rows: 351,
        n_features: 34,
        n_factors: 3,
        mu: 1.3,
        sigma: 2.2,
        tau: 0.6,
        positive_fraction: 0.36,
        seed: 351,
    }
}

/// Shape-matched stand-in for the 208-row, 60-feature sonar task.
pub fn sonar_standin() -> LatentFixture {
    LatentFixture {
        n_rows: 208,
        n_features: 60,
        n_factors: 3,
        mu: 0.9,
        sigma: 1.8,
        tau: 1.0,
        positive_fraction: 0.47,
        seed: 208,
    }
}

/// Resolve a battery dataset: the real CSV when present, otherwise the
/// stand-in fixture materialized as a CSV under `scratch`. Returns the
/// source plus a flag saying whether a stand-in was used.
pub fn resolve_battery_source(
    name: &str,
    label_column: &str,
    fixture: &LatentFixture,
    scratch: &Path,
) -> (DatasetSource, bool) {
    let real = data_dir().join(format!("{name}.csv"));
    if real.exists() {
        return (
            DatasetSource::Csv {
                path: real,
                label_column: label_column.to_string(),
                missing_sentinels: None,
            },
            false,
        );
    }
    let ds = latent_fixture(fixture);
    let path = scratch.join(format!("{name}_standin.csv"));
    write_csv(&ds, &path, "label").expect("writing stand-in fixture");
    (
        DatasetSource::Csv {
            path,
            label_column: "label".to_string(),
            missing_sentinels: None,
        },
        true,
    )
}
