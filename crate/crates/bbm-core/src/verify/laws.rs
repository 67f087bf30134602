//! Conditional-law checks: simulated conditioned batches against the exact
//! finite-`t` first-branch decomposition and against the limit laws.
//!
//! Three layers per suite run:
//!
//! 1. **exact** — the empirical `(τ, B_τ, M_t)` marginals against the
//!    solver's finite-`t` conditional laws at the same `(z, t)`. These must
//!    agree at tight tolerance whenever the solver and simulator are both
//!    correct; there is no asymptotic gap.
//! 2. **asymptotic** — standardized marginals against the regime's limit
//!    laws at generous tolerance (the limits carry no convergence rate).
//! 3. **structural** — an independence proxy: the limit factorizes the
//!    branch time from the maximum gap, so their empirical correlation
//!    should be near zero.
//!
//! A failed asymptotic check while the whole exact layer passes is labeled
//! a finite-`t` gap and downgraded to inconclusive: both engines agree, the
//! horizon is simply too short for the limit.

use super::ks::{ks_statistic, pearson_correlation};
use super::report::{ComparisonReport, ReportMeta, Verdict};
use crate::math::{
    bramson_centering, classify_regime, limit_joint_cdf_low, log_normal_cdf, normal_cdf,
    xi_critical_density, Regime, SQRT_2, SQRT_2_GAMMA,
};
use crate::sim::ConditionedBatch;
use crate::solver::{conditional_first_branch, y_given_s, SolutionField};
use crate::{Error, Result};

/// Sample floor below which verdicts are withheld (KS asymptotics and 3σ
/// binomial bands are not trustworthy in small samples).
pub const SAMPLE_FLOOR: usize = 500;

/// Which limit law the batch should be compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitLawInputs {
    /// `−γ < α < 1`: Gaussian branch time, exponential gap.
    High,
    /// `α < −γ`: the mixed atom/branch law; needs the integral constant
    /// `Φ(α)` consistent with the supplied limit field.
    Low { phi: f64 },
    /// `α = −γ`: rescaled branch time `(t−τ)/√t` with its explicit density.
    Critical,
    /// Conditioning at `m_t − a`: Gaussian branch time at scale `√(a/8)`.
    /// `alpha` is ignored in this mode.
    Moderate { a: f64 },
}

/// Linear interpolation of a cumulative table; clamps outside the grid.
fn interp_cum(grid: &[f64], cum: &[f64], x: f64) -> f64 {
    let n = grid.len();
    if x <= grid[0] {
        return cum[0];
    }
    if x >= grid[n - 1] {
        return cum[n - 1];
    }
    let i = grid.partition_point(|&g| g <= x);
    let w = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
    cum[i - 1] + w * (cum[i] - cum[i - 1])
}

/// Conditional position law of the first branch at one marginal node,
/// flattened for repeated CDF evaluation.
struct YSlice {
    s: f64,
    /// Branch-time marginal density at `s`.
    weight: f64,
    grid: Vec<f64>,
    cum: Vec<f64>,
    /// Fraction of the conditional law covered by the grid (the remainder
    /// sits on the analytic plateau to the left).
    covered: f64,
}

impl YSlice {
    /// `P(B_τ ≤ x | τ = s, M_t ≤ z)`.
    fn cdf(&self, x: f64) -> f64 {
        let below = 1.0 - self.covered;
        if x <= self.grid[0] {
            if below == 0.0 {
                return 0.0;
            }
            let log_ratio = log_normal_cdf(x / self.s.sqrt())
                - log_normal_cdf(self.grid[0] / self.s.sqrt());
            return below * log_ratio.exp();
        }
        (below + self.covered * interp_cum(&self.grid, &self.cum, x)).min(1.0)
    }
}

/// The full finite-`t` conditional CDF of `B_{τ∧t}` given `{M_t ≤ z}`,
/// assembled from the branch-time marginal and the per-`s` position laws.
struct BranchPositionCdf {
    atom: f64,
    z: f64,
    t: f64,
    /// Marginal nodes `0 = s₀ < … < s_m = t` and densities.
    s_grid: Vec<f64>,
    s_vals: Vec<f64>,
    /// Position laws at the interior nodes (index k ↔ s_grid[k+1]).
    slices: Vec<YSlice>,
}

impl BranchPositionCdf {
    fn build(
        field: &SolutionField,
        fb: &crate::solver::FirstBranchConditional,
        z: f64,
        t: f64,
    ) -> Result<Self> {
        let s_grid = fb.s_marginal.grid().to_vec();
        let s_vals = fb.s_marginal.values().to_vec();
        let mut slices = Vec::with_capacity(s_grid.len().saturating_sub(2));
        for (&s, &weight) in s_grid.iter().zip(&s_vals).skip(1) {
            if s >= t - 1e-9 {
                break;
            }
            let curve = y_given_s(field, z, t, s)?;
            let covered = curve.normalization_before_rescale().min(1.0);
            let cum = curve.cumulative();
            slices.push(YSlice {
                s,
                weight,
                grid: curve.grid().to_vec(),
                cum,
                covered,
            });
        }
        Ok(Self {
            atom: fb.atom,
            z,
            t,
            s_grid,
            s_vals,
            slices,
        })
    }

    /// Position law shared by the `s = t` endpoint and the no-branch atom:
    /// a Gaussian at variance `t` conditioned to `(−∞, z]`.
    fn endpoint_cdf(&self, x: f64) -> f64 {
        (log_normal_cdf(x.min(self.z) / self.t.sqrt())
            - log_normal_cdf(self.z / self.t.sqrt()))
        .exp()
        .min(1.0)
    }

    /// `P(B_{τ∧t} ≤ x | M_t ≤ z)`.
    fn cdf(&self, x: f64) -> f64 {
        // Branch part: trapezoid of f(s)·F_{y|s}(x) over the marginal grid.
        // Endpoints in closed form: s→0 gives a point mass at the origin,
        // s=t gives the conditioned-Gaussian law.
        let g0 = self.s_vals[0] * if x >= 0.0 { 1.0 } else { 0.0 };
        let g_end = *self.s_vals.last().unwrap() * self.endpoint_cdf(x);
        let mut g = Vec::with_capacity(self.s_grid.len());
        g.push(g0);
        for slice in &self.slices {
            g.push(slice.weight * slice.cdf(x));
        }
        g.push(g_end);
        // The slice list covers every interior node by construction, so the
        // g-vector aligns with the marginal grid.
        debug_assert_eq!(g.len(), self.s_grid.len());
        let mut branch = 0.0;
        for i in 1..g.len() {
            branch += 0.5 * (g[i] + g[i - 1]) * (self.s_grid[i] - self.s_grid[i - 1]);
        }
        (self.atom * self.endpoint_cdf(x) + branch).clamp(0.0, 1.0)
    }
}

fn meta_for(t: f64, alpha: Option<f64>, n: usize, note: Option<String>) -> ReportMeta {
    ReportMeta {
        t: Some(t),
        alpha,
        n_samples: Some(n as u64),
        note,
        ..Default::default()
    }
}

/// Run the three-layer conditional-law suite on one conditioned batch.
///
/// `alpha` names the conditioning line `z = √2αt` (ignored in
/// [`LimitLawInputs::Moderate`] mode, where `z = m_t − a`); it must match
/// the regime of the requested limit law, and `batch.threshold` must match
/// the implied `z`. For the low regime the `field` must extend past the
/// largest observable branch age so the limit CDFs are well resolved.
pub fn conditional_law_suite(
    field: &SolutionField,
    batch: &ConditionedBatch,
    alpha: f64,
    t: f64,
    limit: LimitLawInputs,
) -> Result<Vec<ComparisonReport>> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
    }
    let z = match limit {
        LimitLawInputs::Moderate { a } => {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "deviation a must be finite and nonnegative, got {a}"
                )));
            }
            if a > t / 4.0 {
                return Err(Error::Regime(format!(
                    "a = {a} is not o(t) at t = {t} (limit a <= t/4)"
                )));
            }
            bramson_centering(t)? - a
        }
        _ => {
            let regime = classify_regime(alpha)?.regime;
            let wanted = match limit {
                LimitLawInputs::High => Regime::High,
                LimitLawInputs::Low { .. } => Regime::Low,
                LimitLawInputs::Critical => Regime::Critical,
                LimitLawInputs::Moderate { .. } => unreachable!(),
            };
            if regime != wanted {
                return Err(Error::Regime(format!(
                    "alpha = {alpha} classifies as {regime:?}, but the {wanted:?} limit law \
                     was requested"
                )));
            }
            SQRT_2 * alpha * t
        }
    };
    if (batch.threshold - z).abs() > 1e-9 * z.abs().max(1.0) {
        return Err(Error::Configuration(format!(
            "batch threshold {} does not match the implied conditioning line {z}",
            batch.threshold
        )));
    }
    if let LimitLawInputs::Low { phi } = limit {
        if !(phi.is_finite() && phi > 1.0 / (-alpha)) {
            return Err(Error::Configuration(format!(
                "phi = {phi} is not a valid integral constant at alpha = {alpha} \
                 (must exceed the no-branch mass {})",
                1.0 / (-alpha)
            )));
        }
    }

    let n = batch.accepted.len();
    let alpha_meta = match limit {
        LimitLawInputs::Moderate { .. } => None,
        _ => Some(alpha),
    };
    if n == 0 {
        return Ok(vec![ComparisonReport::informational(
            "laws/empty-batch",
            0.0,
            SAMPLE_FLOOR as f64,
            meta_for(
                t,
                alpha_meta,
                0,
                Some("no accepted realizations at this threshold".into()),
            ),
        )]);
    }

    let taus: Vec<f64> = batch.accepted.iter().map(|r| r.tau).collect();
    let maxes: Vec<f64> = batch.accepted.iter().map(|r| r.m_t).collect();
    let positions: Vec<f64> = batch.accepted.iter().map(|r| r.x_at_tau).collect();
    let gaps: Vec<f64> = maxes.iter().map(|&m| z - m).collect();
    let unbranched = batch.accepted.iter().filter(|r| !r.branched).count();

    let mut reports = Vec::new();
    let tol_exact = 0.02f64.max(1.63 / (n as f64).sqrt());

    // ---- layer (i): exact finite-t laws -------------------------------
    let fb = conditional_first_branch(field, z, t)?;
    let (_, logu_zt) = field.evaluate(z, t)?;

    let s_grid = fb.s_marginal.grid().to_vec();
    let s_cum = fb.s_marginal.cumulative();
    let tau_cdf = |x: f64| -> f64 {
        if x < 0.0 {
            0.0
        } else if x >= t {
            1.0
        } else {
            interp_cum(&s_grid, &s_cum, x).min(1.0)
        }
    };
    reports.push(ComparisonReport::two_sided(
        "laws/exact/tau-ks",
        ks_statistic(&taus, tau_cdf)?,
        0.0,
        tol_exact,
        meta_for(t, alpha_meta, n, None),
    ));

    let max_cdf = |x: f64| -> f64 {
        match field.evaluate(x.min(z), t) {
            Ok((_, lu)) => (lu - logu_zt).exp().clamp(0.0, 1.0),
            Err(_) => 0.0, // left of the window: mass below resolution
        }
    };
    reports.push(ComparisonReport::two_sided(
        "laws/exact/max-ks",
        ks_statistic(&maxes, max_cdf)?,
        0.0,
        tol_exact,
        meta_for(t, alpha_meta, n, None),
    ));

    let pos_law = BranchPositionCdf::build(field, &fb, z, t)?;
    reports.push(ComparisonReport::two_sided(
        "laws/exact/branch-position-ks",
        ks_statistic(&positions, |x| pos_law.cdf(x))?,
        0.0,
        tol_exact,
        meta_for(t, alpha_meta, n, None),
    ));

    let emp_atom = unbranched as f64 / n as f64;
    let atom_tol = 3.0 * (fb.atom * (1.0 - fb.atom) / n as f64).sqrt() + 1.0 / n as f64;
    reports.push(ComparisonReport::two_sided(
        "laws/exact/no-branch-atom",
        emp_atom,
        fb.atom,
        atom_tol,
        meta_for(t, alpha_meta, n, Some("binomial 3-sigma band".into())),
    ));
    let exact_len = reports.len();

    // ---- layer (ii): limit laws ----------------------------------------
    let tol_asym = 0.1;
    match limit {
        LimitLawInputs::High => {
            let mean = (1.0 - alpha) * t / SQRT_2;
            let sd = (t * (1.0 - alpha) / (4.0 * SQRT_2)).sqrt();
            let std: Vec<f64> = taus.iter().map(|&s| (s - mean) / sd).collect();
            reports.push(ComparisonReport::two_sided(
                "laws/asymptotic/tau-gaussian-ks",
                ks_statistic(&std, normal_cdf)?,
                0.0,
                tol_asym,
                meta_for(t, alpha_meta, n, None),
            ));
        }
        LimitLawInputs::Critical => {
            let std: Vec<f64> = taus.iter().map(|&s| (t - s) / t.sqrt()).collect();
            let grid: Vec<f64> = (0..=8192).map(|i| 1e-9 + i as f64 * (8.0 / 8192.0)).collect();
            let curve = xi_critical_density(&grid)?;
            let cum = curve.cumulative();
            let xi_cdf = |x: f64| -> f64 {
                if x <= 0.0 {
                    0.0
                } else {
                    interp_cum(curve.grid(), &cum, x).min(1.0)
                }
            };
            reports.push(ComparisonReport::two_sided(
                "laws/asymptotic/branch-time-critical-ks",
                ks_statistic(&std, xi_cdf)?,
                0.0,
                tol_asym,
                meta_for(t, alpha_meta, n, None),
            ));
        }
        LimitLawInputs::Low { phi } => {
            let horizon = *field.times().last().unwrap();
            let p_lim = (1.0 / (-alpha)) / phi;
            let s2a = SQRT_2 * alpha;

            let ages: Vec<f64> = taus.iter().map(|&s| t - s).collect();
            let age_cdf = |x: f64| -> Result<f64> {
                if x < 0.0 {
                    Ok(0.0)
                } else {
                    limit_joint_cdf_low(x.min(horizon), 1e9, 0.0, alpha, field, phi)
                }
            };
            // Pre-tabulate on sorted samples would re-run the s-integral per
            // call; the integral is O(stored slices) and n is ≤ a few 10⁴,
            // so direct evaluation stays well under a second.
            reports.push(ComparisonReport::two_sided(
                "laws/asymptotic/branch-age-low-ks",
                ks_statistic(&ages, |x| age_cdf(x).unwrap_or(f64::NAN))?,
                0.0,
                tol_asym,
                meta_for(t, alpha_meta, n, None),
            ));

            let chis: Vec<f64> = batch
                .accepted
                .iter()
                .filter(|r| r.branched)
                .map(|r| z - r.x_at_tau)
                .collect();
            if !chis.is_empty() {
                let chi_cdf = |x: f64| -> Result<f64> {
                    let full = limit_joint_cdf_low(horizon, x, 0.0, alpha, field, phi)?;
                    let atom_part = p_lim * (1.0 - (s2a * x.max(0.0)).exp());
                    Ok(((full - atom_part) / (1.0 - p_lim)).clamp(0.0, 1.0))
                };
                let mut r = ComparisonReport::two_sided(
                    "laws/asymptotic/branch-gap-low-ks",
                    ks_statistic(&chis, |x| chi_cdf(x).unwrap_or(f64::NAN))?,
                    0.0,
                    tol_asym,
                    meta_for(t, alpha_meta, chis.len(), Some("branched subset".into())),
                );
                if chis.len() < SAMPLE_FLOOR {
                    r = r.downgrade("fewer than 500 branched samples");
                }
                reports.push(r);
            }

            reports.push(ComparisonReport::two_sided(
                "laws/asymptotic/no-branch-atom-limit",
                emp_atom,
                p_lim,
                tol_asym,
                meta_for(t, alpha_meta, n, None),
            ));
        }
        LimitLawInputs::Moderate { a } => {
            let mut r = if a > 0.0 {
                let sd = (a / 8.0).sqrt();
                let std: Vec<f64> = taus.iter().map(|&s| (s - a / 2.0) / sd).collect();
                ComparisonReport::two_sided(
                    "laws/asymptotic/tau-gaussian-moderate-ks",
                    ks_statistic(&std, normal_cdf)?,
                    0.0,
                    0.15,
                    meta_for(t, alpha_meta, n, None),
                )
            } else {
                ComparisonReport::informational(
                    "laws/asymptotic/tau-gaussian-moderate-ks",
                    f64::NAN,
                    0.0,
                    meta_for(t, alpha_meta, n, None),
                )
            };
            if a > 0.0 && a < 2.0 {
                r = r.downgrade("a too small for the Gaussian branch-time window");
            }
            reports.push(r);
        }
    }

    // Maximum gap: E = z − M_t is asymptotically exponential in every mode.
    let gap_rate = match limit {
        LimitLawInputs::Low { .. } => -SQRT_2 * alpha,
        _ => SQRT_2_GAMMA,
    };
    let exp_cdf = |x: f64| -> f64 {
        if x < 0.0 {
            0.0
        } else {
            1.0 - (-gap_rate * x).exp()
        }
    };
    reports.push(ComparisonReport::two_sided(
        "laws/asymptotic/max-gap-exponential-ks",
        ks_statistic(&gaps, exp_cdf)?,
        0.0,
        tol_asym,
        meta_for(
            t,
            alpha_meta,
            n,
            Some(format!("exponential rate {gap_rate:.6}")),
        ),
    ));

    // ---- layer (iii): structural ----------------------------------------
    reports.push(ComparisonReport::two_sided(
        "laws/structural/tau-max-correlation",
        pearson_correlation(&taus, &gaps)?,
        0.0,
        0.15,
        meta_for(
            t,
            alpha_meta,
            n,
            Some("limit factorizes branch time from max gap".into()),
        ),
    ));

    // Sample floor and finite-t labeling.
    if n < SAMPLE_FLOOR {
        return Ok(reports
            .into_iter()
            .map(|r| r.downgrade("fewer than 500 accepted samples; verdict withheld"))
            .collect());
    }
    let exact_all_pass = reports[..exact_len].iter().all(|r| r.passed());
    if exact_all_pass {
        for r in reports.iter_mut().skip(exact_len) {
            if r.verdict == Verdict::Fail && r.name.starts_with("laws/asymptotic/") {
                *r = r.clone().downgrade(
                    "finite-t gap: exact layer passes, limit not yet reached at this horizon",
                );
            }
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_conditioned, SimConfig};
    use crate::solver::{solve_fd, Initial, SpaceTimeGrid, WindowPolicy};

    fn field_t3() -> SolutionField {
        let grid =
            SpaceTimeGrid::new(-30.0, 30.0, 0.05, 0.0125, 3.0, WindowPolicy::Fixed).unwrap();
        let times: Vec<f64> = (1..=60).map(|i| 0.05 * i as f64).collect();
        solve_fd(&grid, Initial::Heaviside, &times).unwrap()
    }

    #[test]
    fn exact_layer_agrees_with_simulation_in_the_bulk() {
        // Conditioning on a likely event keeps the batch cheap; exact-layer
        // checks must pass (solver and simulator describe the same process).
        let field = field_t3();
        let t = 3.0;
        let config = SimConfig::new(t, 02_07_1921).unwrap();
        let batch = simulate_conditioned(&config, 0.0, 3_000_000, Some(4000)).unwrap();
        let reports =
            conditional_law_suite(&field, &batch, 0.0, t, LimitLawInputs::High).unwrap();
        for r in reports.iter().filter(|r| r.name.starts_with("laws/exact/")) {
            assert!(
                r.passed(),
                "exact-layer check {} failed: {} vs {} (tol {})",
                r.name,
                r.empirical,
                r.reference,
                r.tolerance
            );
        }
        // The suite contains all three layers.
        assert!(reports.iter().any(|r| r.name.starts_with("laws/asymptotic/")));
        assert!(reports.iter().any(|r| r.name.starts_with("laws/structural/")));
        // No hard asymptotic failures should survive when the exact layer
        // passes — they are downgraded as finite-t gaps.
        for r in &reports {
            assert!(
                r.verdict != Verdict::Fail || !r.name.starts_with("laws/asymptotic/"),
                "{} should have been downgraded, not failed",
                r.name
            );
        }
    }

    #[test]
    fn small_batches_are_inconclusive_and_empty_batches_reported() {
        let field = field_t3();
        let config = SimConfig::new(3.0, 7).unwrap();
        let batch = simulate_conditioned(&config, 0.0, 100_000, Some(50)).unwrap();
        let reports =
            conditional_law_suite(&field, &batch, 0.0, 3.0, LimitLawInputs::High).unwrap();
        assert!(reports.iter().all(|r| r.verdict == Verdict::Inconclusive));

        let mut empty = batch.clone();
        empty.accepted.clear();
        let reports =
            conditional_law_suite(&field, &empty, 0.0, 3.0, LimitLawInputs::High).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].name, "laws/empty-batch");
        assert_eq!(reports[0].verdict, Verdict::Inconclusive);
    }

    #[test]
    fn threshold_and_regime_mismatches_error() {
        let field = field_t3();
        let config = SimConfig::new(3.0, 7).unwrap();
        let batch = simulate_conditioned(&config, 0.0, 10_000, Some(10)).unwrap();
        // α=0 batch checked against a low-regime law: regime error.
        assert!(matches!(
            conditional_law_suite(&field, &batch, -1.0, 3.0, LimitLawInputs::Low { phi: 2.3 }),
            Err(Error::Configuration(_)) | Err(Error::Regime(_))
        ));
        // Right regime, wrong threshold for the claimed α.
        assert!(matches!(
            conditional_law_suite(&field, &batch, 0.5, 3.0, LimitLawInputs::High),
            Err(Error::Configuration(_))
        ));
        // Moderate mode with a too large for the horizon.
        assert!(matches!(
            conditional_law_suite(&field, &batch, 0.0, 3.0, LimitLawInputs::Moderate { a: 2.0 }),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn branch_position_cdf_is_a_cdf() {
        let field = field_t3();
        let fb = conditional_first_branch(&field, 0.0, 3.0).unwrap();
        let law = BranchPositionCdf::build(&field, &fb, 0.0, 3.0).unwrap();
        let mut prev = 0.0;
        for i in -80..=80 {
            let x = i as f64 * 0.1;
            let v = law.cdf(x);
            assert!((0.0..=1.0).contains(&v));
            assert!(v + 1e-9 >= prev, "CDF must be nondecreasing at x={x}");
            prev = v;
        }
        assert!(law.cdf(-8.0) < 0.02);
        assert!(law.cdf(8.0) > 0.98);
    }
}
