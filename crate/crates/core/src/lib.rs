//! Tabular outcome prediction built from scratch: KNN imputation, class
//! rebalancing, impurity-based feature ranking, nine classifier families,
//! stratified cross-validation with ROC reporting, and random search.
//!
//! Runnable examples, one per capability:
//!
//! ```text
//! examples/
//!   ingest_and_split.rs     CSV + schema, stratified folds, divergence report
//!   impute_missing.rs       boolean fill and nan-euclidean KNN imputation
//!   rebalance_classes.rs    oversampling, undersampling, week bins
//!   rank_features.rs        extra-trees / random-forest importance, top-k
//!   model_zoo.rs            every family fit and scored on one table
//!   evaluate_metrics.rs     rates, confusion matrix, ROC and AUC
//!   cross_validate.rs       five-fold report with mean and spread
//!   random_search.rs        randomized hyperparameter search
//!   run_experiment.rs       the full config-driven pipeline
//! ```

pub mod cv;
pub mod data;
pub mod error;
pub mod importance;
pub mod impute;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod rebalance;
pub mod rng;
pub mod synth;
pub mod tree;
pub mod tuning;

pub use error::{Error, Result};
pub use matrix::Matrix;
