//! Sampling the limiting extremal point process in the deep subcritical
//! regime `α < −γ`.
//!
//! The limit law (the `P(ξ≤·, χ≤·, E≥·)` joint whose CDF
//! [`crate::math::limit_joint_cdf_low`] computes) has the two-part structure
//!
//! - with probability `(1/(−α))/Φ(α)` the atom `ξ = 0`: a single point `−χ`
//!   with `χ ~ Exp(−√2α)`;
//! - otherwise a branch age `ξ = s` and gap `χ = z` drawn from the density
//!   `∝ e^{(1−α²)s}·√2 e^{√2αz}u(z,s)²`, followed by two independent BBMs of
//!   length `ξ` conditioned (by rejection) to stay below `χ`, all terminal
//!   positions shifted by `−χ`.
//!
//! [`LowExtremalSampler`] tabulates the `(s, z)` inverse CDFs once from a
//! solved field and then draws in microseconds; the per-draw conditioned
//! trees reuse the event-driven walker with early abort.

use super::bbm::TreeRunner;
use super::rng::RngStream;
use crate::math::{classify_regime, slice_integral_log, Regime, SQRT_2};
use crate::solver::SolutionField;
use crate::{Error, Result};

/// Log-density window kept in the per-slice gap tables; mass more than
/// `e^{−46}` below the slice peak is folded into the analytic tail.
const LOG_PRUNE: f64 = 46.0;
/// Initial per-tree rejection budget (attempts) for the conditioned BBMs.
const INITIAL_BUDGET: u64 = 10_000;
/// Population cap for the conditioned trees (ages are ≤ the field horizon,
/// so this is far above the expected `e^ξ` population).
const TREE_CAP: usize = 2_000_000;

/// Inverse-CDF table for the gap `χ` at one stored branch age.
struct GapTable {
    /// Node positions (pruned span of the slice window).
    z: Vec<f64>,
    /// Density values at the nodes (arbitrary common scale).
    vals: Vec<f64>,
    /// Normalized cumulative mass at the nodes; `cum.last() < 1`, the
    /// remainder is the analytic exponential tail beyond the last node.
    cum: Vec<f64>,
}

impl GapTable {
    /// Build from one stored slice: log-density `√2αz + 2 log u(z,s)`.
    fn from_slice(s2a: f64, nodes: &[f64], logu: &[f64], dz: f64) -> Result<Self> {
        let logd: Vec<f64> = nodes
            .iter()
            .zip(logu)
            .map(|(&z, &lu)| s2a * z + 2.0 * lu)
            .collect();
        let peak = logd.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(Error::Precision(
                "gap-table slice has no representable density mass".into(),
            ));
        }
        let first = logd.iter().position(|&l| l >= peak - LOG_PRUNE).unwrap();
        let last = logd.iter().rposition(|&l| l >= peak - LOG_PRUNE).unwrap();
        let z: Vec<f64> = nodes[first..=last].to_vec();
        let vals: Vec<f64> = logd[first..=last].iter().map(|&l| (l - peak).exp()).collect();
        if z.len() < 2 {
            return Err(Error::Coverage(
                "gap-table slice keeps fewer than two nodes".into(),
            ));
        }
        // Exponential tail beyond the last kept node, with u frozen there
        // (exact once the window plateau is reached, ≤ e^{−46} relative
        // otherwise): ∫_{z_last}^∞ e^{√2αz}u² dz = e^{l_last}/(−√2α).
        let tail = (logd[last] - peak).exp() / (-s2a);
        let mut cum = vec![0.0; z.len()];
        let mut acc = 0.0;
        for k in 1..z.len() {
            acc += 0.5 * (vals[k - 1] + vals[k]) * dz;
            cum[k] = acc;
        }
        let total = acc + tail;
        for c in &mut cum {
            *c /= total;
        }
        let vals = vals.iter().map(|v| v / total).collect();
        Ok(GapTable { z, vals, cum })
    }

    /// Inverse CDF at `r ∈ [0,1)`.
    fn invert(&self, r: f64, s2a: f64) -> f64 {
        let last = *self.cum.last().unwrap();
        if r >= last {
            // Analytic exponential tail.
            let z_last = *self.z.last().unwrap();
            return z_last + ((1.0 - r) / (1.0 - last)).ln() / s2a;
        }
        let (j, x) = invert_linear_cells(&self.z, &self.vals, &self.cum, r);
        self.z[j] + x
    }
}

/// Invert a piecewise-linear density given nodes, values, and normalized
/// node cumulatives; returns (cell index, offset within the cell).
fn invert_linear_cells(grid: &[f64], vals: &[f64], cum: &[f64], r: f64) -> (usize, f64) {
    let j = match cum.binary_search_by(|c| c.partial_cmp(&r).unwrap()) {
        Ok(j) => j.min(grid.len() - 2),
        Err(j) => j.saturating_sub(1).min(grid.len() - 2),
    };
    let h = grid[j + 1] - grid[j];
    let m = r - cum[j];
    let (v0, v1) = (vals[j], vals[j + 1]);
    let a = 0.5 * (v1 - v0) / h;
    // Solve a·x² + v0·x = m on [0, h].
    let x = if a.abs() * h < 1e-12 * v0.max(1e-300) {
        m / v0.max(1e-300)
    } else {
        let disc = (v0 * v0 + 4.0 * a * m).max(0.0);
        (disc.sqrt() - v0) / (2.0 * a)
    };
    (j, x.clamp(0.0, h))
}

/// Tabulated sampler of the `α < −γ` limit extremal process.
pub struct LowExtremalSampler {
    alpha: f64,
    s2a: f64,
    p_atom: f64,
    /// Branch-age nodes `{0} ∪ stored times` and the continuous-part density
    /// (normalized to total mass 1) with its cumulative.
    s_nodes: Vec<f64>,
    s_density: Vec<f64>,
    s_cum: Vec<f64>,
    /// One gap table per stored time (`s_nodes[i+1]`).
    gap_tables: Vec<GapTable>,
    rejection_budget: u64,
    runner: TreeRunner,
}

impl LowExtremalSampler {
    /// Precompute the inverse-CDF tables from a solved field and `Φ(α)`.
    ///
    /// `phi` must come from the same field (e.g. via
    /// [`crate::math::phi_alpha`]); the constructor cross-checks that the
    /// atom plus the tabulated branch mass reproduce it to 2%.
    pub fn new(alpha: f64, field: &SolutionField, phi: f64) -> Result<Self> {
        let params = classify_regime(alpha)?;
        if params.regime != Regime::Low {
            return Err(Error::Regime(format!(
                "the limit extremal sampler requires alpha < -gamma, got {alpha}"
            )));
        }
        if !field.is_cdf_type() {
            return Err(Error::InvalidInput(
                "extremal sampling needs a CDF-type field (Heaviside class)".into(),
            ));
        }
        if !(phi.is_finite() && phi > 1.0 / (-alpha)) {
            return Err(Error::Configuration(format!(
                "phi must exceed the atom weight 1/(-alpha) = {}, got {phi}",
                1.0 / (-alpha)
            )));
        }
        let p_atom = (1.0 / (-alpha)) / phi;
        let s2a = SQRT_2 * alpha;
        let times = field.times();
        if times.len() < 4 {
            return Err(Error::Coverage(
                "extremal sampling needs at least 4 stored slices".into(),
            ));
        }
        let dz = field.grid().dz;
        let mut s_nodes = Vec::with_capacity(times.len() + 1);
        let mut density = Vec::with_capacity(times.len() + 1);
        let mut gap_tables = Vec::with_capacity(times.len());
        s_nodes.push(0.0);
        // s = 0 endpoint: u(·,0)² = 1_{z>0}, so the inner integral is
        // √2∫_0^∞ e^{√2αz}dz = 1/(−α).
        density.push(1.0 / (-alpha));
        for (i, &s) in times.iter().enumerate() {
            let nodes = field.slice_nodes(i);
            let logu = field.slice_logu(i);
            let log_inner = slice_integral_log(alpha, &nodes, logu, dz);
            density.push(((1.0 - alpha * alpha) * s + log_inner).exp());
            gap_tables.push(GapTable::from_slice(s2a, &nodes, logu, dz)?);
            s_nodes.push(s);
        }
        let mut branch_mass = 0.0;
        for k in 1..s_nodes.len() {
            branch_mass += 0.5 * (density[k - 1] + density[k]) * (s_nodes[k] - s_nodes[k - 1]);
        }
        let closure = (1.0 / (-alpha) + branch_mass) / phi;
        if (closure - 1.0).abs() > 0.02 {
            return Err(Error::Configuration(format!(
                "phi is inconsistent with the field: atom + branch mass gives {closure:.4} of it \
                 (is phi from the same field, and does the horizon cover the branch-age tail?)"
            )));
        }
        // Normalize the continuous part to total mass 1 and build its CDF.
        let mut s_cum = vec![0.0; s_nodes.len()];
        let mut acc = 0.0;
        for k in 1..s_nodes.len() {
            acc += 0.5 * (density[k - 1] + density[k]) * (s_nodes[k] - s_nodes[k - 1]);
            s_cum[k] = acc;
        }
        for (d, c) in density.iter_mut().zip(&mut s_cum) {
            *d /= branch_mass;
            *c /= branch_mass;
        }
        *s_cum.last_mut().unwrap() = 1.0;
        Ok(LowExtremalSampler {
            alpha,
            s2a,
            p_atom,
            s_nodes,
            s_density: density,
            s_cum,
            gap_tables,
            rejection_budget: INITIAL_BUDGET,
            runner: TreeRunner::new(),
        })
    }

    /// The atom weight `P(ξ = 0) = 1/(−αΦ(α))`.
    pub fn atom_probability(&self) -> f64 {
        self.p_atom
    }

    /// Drift parameter this sampler was built for.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Draw the pair `(ξ, χ)` conditioned on the branch event.
    ///
    /// `ξ` comes from the piecewise-linear branch-age marginal; `χ` from the
    /// gap table of a randomized-rounded neighbor age (error `O(Δs²)` after
    /// mixing).
    pub(crate) fn draw_pair(&self, stream: &mut RngStream) -> (f64, f64) {
        let r = stream.uniform();
        let (cell, x) = invert_linear_cells(&self.s_nodes, &self.s_density, &self.s_cum, r);
        let xi = self.s_nodes[cell] + x;
        let h = self.s_nodes[cell + 1] - self.s_nodes[cell];
        let idx = if stream.uniform() < x / h { cell + 1 } else { cell };
        let rz = stream.uniform();
        let chi = if idx == 0 {
            // s → 0 limit: density ∝ e^{√2αz} on z > 0.
            (1.0 - rz).ln() / self.s2a
        } else {
            self.gap_tables[idx - 1].invert(rz, self.s2a)
        };
        (xi, chi)
    }

    /// Draw one point set of the limit extremal process (positions ≤ 0,
    /// sorted descending).
    pub fn sample(&mut self, stream: &mut RngStream) -> Result<Vec<f64>> {
        if stream.uniform() < self.p_atom {
            let chi = -(1.0 - stream.uniform()).ln() / (-self.s2a);
            return Ok(vec![-chi]);
        }
        loop {
            let (xi, chi) = self.draw_pair(stream);
            let horizon = xi.max(1e-12);
            let mut points = Vec::new();
            let mut exhausted = false;
            'trees: for _ in 0..2 {
                for _ in 0..self.rejection_budget {
                    let seed = stream.next_u64();
                    if let Some(raw) =
                        self.runner
                            .run(horizon, TREE_CAP, 0, true, Some(chi), seed)?
                    {
                        points.extend(raw.all);
                        continue 'trees;
                    }
                }
                exhausted = true;
                break;
            }
            if exhausted {
                self.rejection_budget *= 2;
                eprintln!(
                    "extremal sampler: rejection budget exhausted at (xi={xi:.4}, chi={chi:.4}); \
                     doubling to {} and resampling the pair",
                    self.rejection_budget
                );
                continue;
            }
            for p in &mut points {
                *p -= chi;
            }
            points.sort_by(|a, b| b.partial_cmp(a).unwrap());
            return Ok(points);
        }
    }
}

/// One draw of the limit extremal process (builds the tables, samples once).
///
/// For batches, construct a [`LowExtremalSampler`] and reuse it: table
/// construction costs milliseconds, a draw costs microseconds.
pub fn sample_limit_extremal_low(
    alpha: f64,
    field: &SolutionField,
    phi: f64,
    stream: &mut RngStream,
) -> Result<Vec<f64>> {
    LowExtremalSampler::new(alpha, field, phi)?.sample(stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{limit_joint_cdf_low, phi_alpha};
    use crate::solver::{solve_fd, Initial, SpaceTimeGrid, WindowPolicy};

    const ALPHA: f64 = -1.0;

    fn stub_field() -> SolutionField {
        // Horizon 8 keeps the Φ(α) time-truncation inside its 0.1% budget
        // (the α=−1 time tail decays like e^{−4γs} ≈ e^{−1.66s}).
        let grid =
            SpaceTimeGrid::new(-38.0, 14.0, 0.05, 0.0125, 8.0, WindowPolicy::Fixed).unwrap();
        let store: Vec<f64> = (1..=80).map(|k| k as f64 * 0.1).collect();
        solve_fd(&grid, Initial::Heaviside, &store).unwrap()
    }

    fn build() -> (LowExtremalSampler, f64) {
        let field = stub_field();
        let phi = phi_alpha(ALPHA, &field).unwrap().value;
        (LowExtremalSampler::new(ALPHA, &field, phi).unwrap(), phi)
    }

    #[test]
    fn draws_are_deterministic_and_nonpositive() {
        let (mut sampler, _) = build();
        let a = sampler.sample(&mut RngStream::from_seed(60)).unwrap();
        let (mut sampler2, _) = build();
        let b = sampler2.sample(&mut RngStream::from_seed(60)).unwrap();
        assert_eq!(a, b);
        let mut stream = RngStream::from_seed(61);
        for _ in 0..500 {
            let points = sampler.sample(&mut stream).unwrap();
            assert!(!points.is_empty());
            assert!(points.windows(2).all(|w| w[0] >= w[1]));
            assert!(points[0] <= 0.0, "max point {} > 0", points[0]);
        }
    }

    #[test]
    fn singleton_probability_matches_atom_weight() {
        let (mut sampler, phi) = build();
        let expected = 1.0 / (-ALPHA * phi);
        assert!((sampler.atom_probability() - expected).abs() < 1e-12);
        let mut stream = RngStream::from_seed(62);
        let n = 20_000;
        let mut singles = 0u64;
        for _ in 0..n {
            // A branch draw always yields ≥ 2 points (two trees, ≥ 1 each),
            // so a singleton is exactly the atom event.
            if sampler.sample(&mut stream).unwrap().len() == 1 {
                singles += 1;
            }
        }
        let emp = singles as f64 / n as f64;
        let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!(
            (emp - expected).abs() < 3.0 * sigma,
            "singleton rate {emp} vs atom {expected} (3σ = {})",
            3.0 * sigma
        );
    }

    #[test]
    fn negated_maximum_is_exponential() {
        // The mixture of the atom gap and (χ − max of two conditioned
        // trees) must reproduce Exp(−√2α) exactly in the limit law.
        let (mut sampler, _) = build();
        let mut stream = RngStream::from_seed(63);
        let n = 20_000;
        let mut gaps: Vec<f64> = Vec::with_capacity(n);
        for _ in 0..n {
            gaps.push(-sampler.sample(&mut stream).unwrap()[0]);
        }
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rate = -SQRT_2 * ALPHA;
        let mut d: f64 = 0.0;
        for (i, &g) in gaps.iter().enumerate() {
            let f = 1.0 - (-rate * g).exp();
            d = d.max((f - i as f64 / n as f64).abs());
            d = d.max(((i + 1) as f64 / n as f64 - f).abs());
        }
        // MC noise ≈ 1.36/√n ≈ 0.0096 plus a small horizon-truncation bias.
        assert!(d < 0.025, "KS distance {d}");
    }

    #[test]
    fn pair_draws_match_the_limit_joint_cdf() {
        let field = stub_field();
        let phi = phi_alpha(ALPHA, &field).unwrap().value;
        let sampler = LowExtremalSampler::new(ALPHA, &field, phi).unwrap();
        let mut stream = RngStream::from_seed(64);
        let n = 50_000;
        let mut pairs = Vec::with_capacity(n);
        for _ in 0..n {
            pairs.push(sampler.draw_pair(&mut stream));
        }
        let p_atom = sampler.atom_probability();
        for (x1, x2) in [(1.0, 0.5), (2.0, 1.5), (0.5, -0.5), (3.5, 3.0)] {
            let joint = limit_joint_cdf_low(x1, x2, 0.0, ALPHA, &field, phi).unwrap();
            let atom_part = p_atom * (1.0 - (SQRT_2 * ALPHA * x2.max(0.0)).exp());
            let reference = (joint - atom_part) / (1.0 - p_atom);
            let emp = pairs
                .iter()
                .filter(|&&(s, z)| s <= x1 && z <= x2)
                .count() as f64
                / n as f64;
            let sigma = (reference * (1.0 - reference) / n as f64).sqrt().max(1e-4);
            assert!(
                (emp - reference).abs() < 3.0 * sigma + 0.01,
                "joint CDF at ({x1},{x2}): sampled {emp}, reference {reference}"
            );
        }
    }

    #[test]
    fn rejects_wrong_regime_and_inconsistent_phi() {
        let field = stub_field();
        assert!(matches!(
            LowExtremalSampler::new(-0.2, &field, 3.0),
            Err(Error::Regime(_))
        ));
        let phi = phi_alpha(ALPHA, &field).unwrap().value;
        assert!(matches!(
            LowExtremalSampler::new(ALPHA, &field, phi * 2.0),
            Err(Error::Configuration(_))
        ));
        // Convenience wrapper goes through the same validation.
        let mut stream = RngStream::from_seed(1);
        assert!(sample_limit_extremal_low(ALPHA, &field, phi, &mut stream).is_ok());
    }
}
