//! Subject-independent cross-validation, segment- and subject-level
//! metrics, and report output.

mod experiment;
mod folds;
mod metrics;
mod report;

#[cfg(test)]
mod tests;

pub use experiment::{fold_plans, run_experiment, run_on_recordings, run_on_segments, score, ExperimentConfig, RunOptions};
pub use folds::{check_disjoint, subject_kfold, Fold, FoldPlan};
pub use metrics::{confusion, metrics, Confusion, Metrics, UndefinedFlags};
pub use report::{emit_report, summarize, FoldResult, Level, LevelResult, LevelSummary, MeanStd, Report, ReportFormat, Summary};
