//! Executable checks: asymptotic-ratio diagnostics, exact-vs-empirical
//! conditional laws, inequality audits, and the report plumbing they share.
//!
//! Every check produces [`ComparisonReport`] values whose verdicts are
//! recomputable from the stored `(empirical, reference, tolerance, kind)`
//! fields; suites merge deterministically by name.

mod bounds;
mod ks;
mod laws;
mod ratios;
mod report;

pub use bounds::bound_audit;
pub use ks::{chi_square_p, ks_statistic, ls_slope, pearson_correlation};
pub use laws::{conditional_law_suite, LimitLawInputs, SAMPLE_FLOOR};
pub use ratios::{
    moderate_deviation_check, ratio_diagnostic_critical, ratio_diagnostic_high,
    ratio_diagnostic_low,
};
pub use report::{
    merge_reports, render_table, reports_to_json, suite_passes, CheckKind, ComparisonReport,
    ReportMeta, Verdict, TOLERANCE_MANIFEST_VERSION,
};
