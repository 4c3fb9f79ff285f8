//! ROC curves, exponent/loss comparison tables and convergence diagnostics.

mod convergence;
mod preflight;
mod roc;
mod table;

pub use convergence::{convergence_diagnostic, ConvergenceRow};
pub use preflight::{preflight_gaussian, PreflightReport, PREFLIGHT_TOLERANCE};
pub use roc::{auc, roc_curve, RocCurve};
pub use table::{
    cell_density_on_grid, exponent_loss_table, exponent_loss_table_on, smooth, table_fields, BandwidthPoint,
    ComparisonEntry, ComparisonReport, TableConfig, TableEntry, TableFields, ZetaSource,
};
