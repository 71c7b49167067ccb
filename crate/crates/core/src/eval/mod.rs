//! Cross-validated evaluation: stratified folds, macro metrics and
//! bootstrap intervals.

pub mod cv;
pub mod folds;
pub mod metrics;

pub use cv::{cross_validate, cross_validate_observed, fit_fold, CvConfig, CvOutcome, EmbeddingSource, FittedFold, PipelineSpec, Resampler};
pub use folds::{stratified_kfold, FoldSplit};
pub use metrics::{bootstrap_f1_ci, confusion_and_metrics, BootstrapConfig, MetricsReport};
