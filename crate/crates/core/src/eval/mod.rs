//! Evaluation protocol: temporal splits and cross-validation, the model ×
//! feature grid, the window/gap sweep, split-count importance and
//! single-attribute explainability.

mod compare;
mod explain;
mod importance;
mod report;
mod split;
mod sweep;

pub use compare::{
    cross_validate, evaluate_cell, run_comparison, CellOutcome, CvResult, EvalConfig, EvalSet, FeatureCombo,
    GridCell, ResultGrid,
};
pub use explain::{
    analyze_schedule, categorical_rmse, delay_stats, explainability_rmse, numeric_rmse, Analysis, Attribute,
    DelayStats, ExplainRow,
};
pub use importance::{best_rank, feature_importance, Importance};
pub use report::{
    config_hash, derive_seed, grid_plot_rows, sha256_hex, sweep_plot_rows, write_grid_csv, write_importance_csv,
    write_plot_data, write_sweep_csv, Manifest, ManifestEntry, PlotRow,
};
pub use split::{inner_validation, random_split, temporal_holdout, temporal_kfold, time_order, Fold, SplitPlan};
pub use sweep::{parse_minutes, sweep_window_gap, SweepCell, SweepSpec, DEFAULT_GAPS, DEFAULT_LENGTHS};
