//! Structured check reports.
//!
//! Every verdict is recomputable from `(kind, empirical, reference,
//! tolerance)` — reports carry no hidden state. Tolerances used by the
//! built-in suites are versioned via [`TOLERANCE_MANIFEST_VERSION`] so report
//! files identify the band set they were judged against.

use crate::Result;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Version tag of the built-in tolerance bands (exact layer KS 0.02 floor /
/// 3σ, asymptotic layer KS 0.10 with theorem-specific widenings, ratio bands
/// recorded per check in the `tolerance` field).
pub const TOLERANCE_MANIFEST_VERSION: &str = "tolerances-v1";

/// Outcome of one check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    /// Not judged: informational value, or sample size below the floor.
    Inconclusive,
}

/// How `empirical` is compared against `reference`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckKind {
    /// Pass iff `|empirical − reference| ≤ tolerance`.
    TwoSided,
    /// Pass iff `empirical ≤ reference` (tolerance recorded but unused).
    UpperBound,
    /// Never judged.
    Informational,
}

/// Context attached to a report.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReportMeta {
    pub t: Option<f64>,
    pub alpha: Option<f64>,
    /// Short description of the grid the inputs were computed on.
    pub grid: Option<String>,
    pub seed: Option<u64>,
    pub n_samples: Option<u64>,
    pub runtime_ms: Option<u64>,
    /// Free-form qualifier (e.g. "finite-t gap", worst margins).
    pub note: Option<String>,
}

/// One named comparison with its verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub name: String,
    pub empirical: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub kind: CheckKind,
    pub verdict: Verdict,
    pub metadata: ReportMeta,
}

impl ComparisonReport {
    /// Two-sided check: pass iff `|empirical − reference| ≤ tolerance`.
    pub fn two_sided(
        name: impl Into<String>,
        empirical: f64,
        reference: f64,
        tolerance: f64,
        metadata: ReportMeta,
    ) -> Self {
        let mut report = ComparisonReport {
            name: name.into(),
            empirical,
            reference,
            tolerance,
            kind: CheckKind::TwoSided,
            verdict: Verdict::Fail,
            metadata,
        };
        report.verdict = report.recompute_verdict();
        report
    }

    /// One-sided check: pass iff `empirical ≤ reference`.
    pub fn upper_bound(
        name: impl Into<String>,
        empirical: f64,
        reference: f64,
        metadata: ReportMeta,
    ) -> Self {
        let mut report = ComparisonReport {
            name: name.into(),
            empirical,
            reference,
            tolerance: 0.0,
            kind: CheckKind::UpperBound,
            verdict: Verdict::Fail,
            metadata,
        };
        report.verdict = report.recompute_verdict();
        report
    }

    /// Unjudged value, reported for the record.
    pub fn informational(
        name: impl Into<String>,
        empirical: f64,
        reference: f64,
        metadata: ReportMeta,
    ) -> Self {
        ComparisonReport {
            name: name.into(),
            empirical,
            reference,
            tolerance: f64::INFINITY,
            kind: CheckKind::Informational,
            verdict: Verdict::Inconclusive,
            metadata,
        }
    }

    /// Downgrade to inconclusive (e.g. sample floor not met), keeping values.
    pub fn downgrade(mut self, reason: &str) -> Self {
        self.verdict = Verdict::Inconclusive;
        self.push_note(reason);
        self
    }

    /// Recompute the verdict from the stored fields (the invariant every
    /// report must satisfy).
    pub fn recompute_verdict(&self) -> Verdict {
        match self.kind {
            CheckKind::Informational => Verdict::Inconclusive,
            _ if self.verdict == Verdict::Inconclusive => Verdict::Inconclusive,
            CheckKind::TwoSided => {
                if self.empirical.is_finite()
                    && (self.empirical - self.reference).abs() <= self.tolerance
                {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
            CheckKind::UpperBound => {
                if self.empirical.is_finite() && self.empirical <= self.reference {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
        }
    }

    /// Append to the metadata note.
    pub fn push_note(&mut self, note: &str) {
        match &mut self.metadata.note {
            Some(existing) => {
                existing.push_str("; ");
                existing.push_str(note);
            }
            None => self.metadata.note = Some(note.to_string()),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Flatten report groups and order deterministically by check name.
pub fn merge_reports(groups: Vec<Vec<ComparisonReport>>) -> Vec<ComparisonReport> {
    let mut all: Vec<ComparisonReport> = groups.into_iter().flatten().collect();
    all.sort_by(|a, b| a.name.cmp(&b.name));
    all
}

/// True when no judged check failed (inconclusive checks do not fail the
/// suite).
pub fn suite_passes(reports: &[ComparisonReport]) -> bool {
    reports.iter().all(|r| r.verdict != Verdict::Fail)
}

/// Machine-readable JSON document for a report set.
pub fn reports_to_json(reports: &[ComparisonReport]) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a> {
        tolerance_manifest: &'static str,
        reports: &'a [ComparisonReport],
    }
    serde_json::to_string_pretty(&Doc {
        tolerance_manifest: TOLERANCE_MANIFEST_VERSION,
        reports,
    })
    .map_err(|e| crate::Error::Integrity(format!("report serialization failed: {e}")))
}

/// Aligned text table for terminals.
pub fn render_table(reports: &[ComparisonReport]) -> String {
    let name_w = reports
        .iter()
        .map(|r| r.name.len())
        .chain(std::iter::once("check".len()))
        .max()
        .unwrap_or(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<name_w$}  {:>13}  {:>13}  {:>10}  {:<12}  note",
        "check", "empirical", "reference", "tolerance", "verdict"
    );
    for r in reports {
        let verdict = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "inconclusive",
        };
        let tol = if r.tolerance.is_finite() {
            fmt_compact(r.tolerance, 4)
        } else {
            "-".to_string()
        };
        let _ = writeln!(
            out,
            "{:<name_w$}  {:>13}  {:>13}  {:>10}  {:<12}  {}",
            r.name,
            fmt_compact(r.empirical, 6),
            fmt_compact(r.reference, 6),
            tol,
            verdict,
            r.metadata.note.as_deref().unwrap_or("")
        );
    }
    out
}

/// Compact float formatting: fixed point for O(1) values, scientific for
/// tiny probabilities and huge counts.
fn fmt_compact(v: f64, precision: usize) -> String {
    if v == 0.0 || (v.abs() >= 1e-4 && v.abs() < 1e6) {
        format!("{v:.precision$}")
    } else {
        format!("{v:.precision$e}")
    }
}
