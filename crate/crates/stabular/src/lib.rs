//! Tabular classification toolkit built around per-column abstraction
//! (discretization) and a categorical likelihood classifier that tolerates
//! missing cells without imputation.
//!
//! The crate is organized as a pipeline:
//!
//! - [`data`] — dataset container, CSV ingestion, train/test splitting,
//!   seeded missing-data injection, and a synthetic dataset generator.
//! - [`abstraction`] — three per-feature discretization schemes (ROC split,
//!   equal-width bins, quantile bins) plus a statistical bound on how many
//!   categories a dataset can support.
//! - [`classifier`] — the abstraction classifier: per-class per-category
//!   probability tables, likelihood-product prediction that skips missing
//!   features, and feature-rank explainability.
//! - [`baselines`] — from-scratch CART / random forest / gradient boosting
//!   with Gini feature importance and the median/mode imputer they need.
//! - [`eval`] — balanced accuracy, precision, recall, and the feature
//!   significance stability measure.
//! - [`harness`] — seeded experiment runner (abstraction comparison,
//!   missing-data sweep, stability) emitting JSON/CSV reports.

pub mod abstraction;
pub mod baselines;
pub mod classifier;
pub mod data;
pub mod error;
pub mod eval;
pub mod harness;
pub mod seed;

pub use error::{Error, Result};
