//! Non-asymptotic inequality audits on a solved field.
//!
//! Unlike the ratio diagnostics these hold at every finite `t` inside their
//! stated validity domain, so the expected violation count is zero and each
//! report carries the worst margin observed. The exception is the
//! `ε`-padded deviation bound, which only holds beyond an unquantified
//! threshold time `t_ε`; violations at reachable horizons are reported
//! honestly rather than excused.

use super::report::{ComparisonReport, ReportMeta};
use crate::math::{bramson_centering, normal_tail_bounds, rate_function, SQRT_2, SQRT_2_GAMMA};
use crate::solver::SolutionField;
use crate::Result;

/// Times at which the per-time audits run when stored.
const PREFERRED_TIMES: [f64; 3] = [5.0, 20.0, 40.0];

/// Slack for representation noise when comparing log-domain quantities.
const AUDIT_EPS: f64 = 1e-9;

fn audit_times(field: &SolutionField) -> Vec<f64> {
    let stored = field.times();
    let mut out: Vec<f64> = PREFERRED_TIMES
        .iter()
        .copied()
        .filter(|&p| stored.iter().any(|&s| (s - p).abs() < 1e-9))
        .collect();
    if out.is_empty() {
        out.push(*stored.last().unwrap());
    }
    out
}

/// Audit the exact inequalities satisfied by `u`:
///
/// 1. the single-particle Gaussian tail bound
///    `u(z,t) ≤ √t·e^{−z²/(2t)}/((−z)√(2π))` for `z < 0`;
/// 2. the Gaussian tail sandwich used to prove it;
/// 3. the `ε`-padded large-deviation upper bound
///    `u(√2at, t) ≤ e^{(ψ(a)+ε)t}` on `a ∈ [−3, 0.9]` with `ε = 0.05`
///    (valid for `t` large; the audit reports violations at face value);
/// 4. stability in `t` of the moderate-deviation envelope constant
///    `c_t = max_z u(m_t−z, t)·e^{√2γ(1−δ)z}` with `δ = 0.2`.
pub fn bound_audit(field: &SolutionField) -> Result<Vec<ComparisonReport>> {
    let times = audit_times(field);
    let mut reports = Vec::new();

    // 1. Gaussian tail bound on the stored slices.
    for &t in &times {
        let slice = field.slice_index(t)?;
        let nodes = field.slice_nodes(slice);
        let logu = field.slice_logu(slice);
        let mut violations = 0u64;
        let mut worst = f64::NEG_INFINITY;
        let mut checked = 0u64;
        for (&z, &lu) in nodes.iter().zip(logu) {
            if !(-20.0..=-1.0).contains(&z) {
                continue;
            }
            checked += 1;
            let log_bound =
                0.5 * t.ln() - z * z / (2.0 * t) - (-z).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
            let margin = lu - log_bound;
            worst = worst.max(margin);
            if margin > 1e-12 {
                violations += 1;
            }
        }
        let meta = ReportMeta {
            t: Some(t),
            note: Some(format!(
                "{checked} nodes in z ∈ [-20,-1]; worst log-margin {worst:.3e}"
            )),
            ..Default::default()
        };
        reports.push(ComparisonReport::upper_bound(
            format!("bounds/gaussian-tail(t={t})"),
            violations as f64,
            0.0,
            meta,
        ));
    }

    // 2. Gaussian sandwich (field-independent; audited alongside for the
    //    record since the tail bound's proof rests on it).
    {
        let mut violations = 0u64;
        let mut worst_gap = 0.0f64;
        let mut z = 1.5;
        while z <= 12.0 + 1e-12 {
            let (lo, exact, hi) = normal_tail_bounds(z)?;
            if !(lo <= exact && exact <= hi) {
                violations += 1;
            }
            worst_gap = worst_gap.max((hi - lo) / exact);
            z += 0.5;
        }
        let meta = ReportMeta {
            note: Some(format!(
                "z ∈ {{1.5, 2.0, …, 12}}; worst relative sandwich width {worst_gap:.3}"
            )),
            ..Default::default()
        };
        reports.push(ComparisonReport::upper_bound(
            "bounds/gaussian-sandwich",
            violations as f64,
            0.0,
            meta,
        ));
    }

    // 3. ε-padded deviation upper bound.
    let eps = 0.05;
    for &t in &times {
        let mut violations = 0u64;
        let mut worst = f64::NEG_INFINITY;
        let mut skipped = 0u64;
        let mut worst_a = f64::NAN;
        let slice = field.slice_index(t)?;
        let nodes = field.slice_nodes(slice);
        let z_low = nodes[0] + 2.0 * field.grid().dz;
        let steps = ((0.9f64 - (-3.0)) / 0.05).round() as i64;
        for k in 0..=steps {
            let a = -3.0 + 0.05 * k as f64;
            let z = SQRT_2 * a * t;
            if z < z_low {
                skipped += 1;
                continue;
            }
            let (_, lu) = field.evaluate(z, t)?;
            let margin = lu - (rate_function(a)? + eps) * t;
            if margin > AUDIT_EPS {
                violations += 1;
            }
            if margin > worst {
                worst = margin;
                worst_a = a;
            }
        }
        let meta = ReportMeta {
            t: Some(t),
            note: Some(format!(
                "a ∈ [-3, 0.9] step 0.05, {skipped} below window; worst log-margin \
                 {worst:.3} at a={worst_a:.2} (bound holds only beyond an unspecified t_eps)"
            )),
            ..Default::default()
        };
        reports.push(ComparisonReport::upper_bound(
            format!("bounds/deviation-upper(t={t},eps={eps})"),
            violations as f64,
            0.0,
            meta,
        ));
    }

    // 4. Moderate-deviation envelope constant stability.
    let delta = 0.2;
    let mut c_values = Vec::new();
    for &t in &times {
        let m_t = bramson_centering(t)?;
        let mut log_c = f64::NEG_INFINITY;
        let mut z = 5.0;
        while z <= 20.0 + 1e-12 {
            let (_, lu) = field.evaluate(m_t - z, t)?;
            log_c = log_c.max(lu + SQRT_2_GAMMA * (1.0 - delta) * z);
            z += 0.25;
        }
        c_values.push((t, log_c));
        reports.push(ComparisonReport::informational(
            format!("bounds/moderate-envelope(t={t},delta={delta})"),
            log_c.exp(),
            f64::NAN,
            ReportMeta {
                t: Some(t),
                note: Some("envelope constant c_t = max u(m_t-z,t)·exp(√2γ(1-δ)z)".into()),
                ..Default::default()
            },
        ));
    }
    {
        let (t0, c0) = c_values[0];
        let (t1, c1) = *c_values.last().unwrap();
        let meta = ReportMeta {
            t: Some(t1),
            note: Some(format!("log c_t drift between t={t0} and t={t1}")),
            ..Default::default()
        };
        let report = ComparisonReport::two_sided(
            format!("bounds/moderate-envelope-stability(delta={delta})"),
            c1 - c0,
            0.0,
            1.5f64.ln(),
            meta,
        );
        reports.push(if c_values.len() < 2 {
            report.downgrade("single audit time; drift unmeasurable")
        } else {
            report
        });
    }

    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_fd, Initial, SpaceTimeGrid, WindowPolicy};
    use crate::verify::Verdict;

    fn field_t5() -> SolutionField {
        let grid =
            SpaceTimeGrid::new(-60.0, 40.0, 0.05, 0.01, 5.0, WindowPolicy::Fixed).unwrap();
        solve_fd(&grid, Initial::Heaviside, &[1.0, 2.5, 5.0]).unwrap()
    }

    #[test]
    fn exact_audits_are_clean_and_padded_bound_reports_honestly_at_t5() {
        let reports = bound_audit(&field_t5()).unwrap();
        // t=5 is a preferred audit time and the only stored one.
        assert!(reports.iter().any(|r| r.name == "bounds/gaussian-tail(t=5)"));
        // The Gaussian audits hold at every t: zero violations expected.
        for r in &reports {
            if r.name.starts_with("bounds/gaussian") {
                assert!(
                    r.passed(),
                    "audit {} flagged {} violations ({:?})",
                    r.name,
                    r.empirical,
                    r.metadata.note
                );
            }
        }
        // The ε-padded deviation bound is a large-t statement; at t=5 the
        // mid-range drifts violate it and the audit must say so.
        let deviation = reports
            .iter()
            .find(|r| r.name.starts_with("bounds/deviation-upper"))
            .unwrap();
        assert_eq!(deviation.verdict, Verdict::Fail);
        assert!(deviation.empirical > 0.0);
        assert!(deviation.metadata.note.as_deref().unwrap().contains("worst log-margin"));
        // Single audit time: the stability report is withheld, not judged.
        let stability = reports
            .iter()
            .find(|r| r.name.starts_with("bounds/moderate-envelope-stability"))
            .unwrap();
        assert_eq!(stability.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn falls_back_to_last_stored_time() {
        let grid =
            SpaceTimeGrid::new(-40.0, 30.0, 0.05, 0.01, 3.0, WindowPolicy::Fixed).unwrap();
        let field = solve_fd(&grid, Initial::Heaviside, &[1.5, 3.0]).unwrap();
        let reports = bound_audit(&field).unwrap();
        assert!(reports.iter().any(|r| r.name == "bounds/gaussian-tail(t=3)"));
    }
}
