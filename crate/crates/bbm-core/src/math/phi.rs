//! The low-regime normalizing constant
//! `Φ(α) = −1/α + √2 ∫₀^∞ ds ∫ dy e^{(1−α²)s + √2αy} u(y,s)²`.

use crate::math::{GAMMA, SQRT_2};
use crate::solver::SolutionField;
use crate::{Error, Result};

/// Value of `Φ(α)` together with an estimate of the truncated mass.
#[derive(Debug, Clone, Copy)]
pub struct PhiEstimate {
    pub alpha: f64,
    pub value: f64,
    /// Conservative estimate of the integral mass beyond the quadrature
    /// window (time horizon and left spatial edge combined).
    pub truncation_estimate: f64,
}

impl PhiEstimate {
    /// Truncated mass as a fraction of the atom term `−1/α` (the budget the
    /// window-sizing rule controls).
    pub fn truncation_fraction(&self) -> f64 {
        self.truncation_estimate / (-1.0 / self.alpha)
    }
}

/// Inner spatial integral `√2 ∫ e^{√2αy} u(y,s)² dy` for one stored slice,
/// computed by log-sum-exp trapezoid, with the exact analytic continuation
/// `u ≡ 1` right of the window. Shared with the extremal-process sampler,
/// whose branch-time density is `e^{(1−α²)s}` times this integral.
pub(crate) fn slice_integral_log(alpha: f64, nodes: &[f64], logu: &[f64], dz: f64) -> f64 {
    let s2a = SQRT_2 * alpha;
    let mut terms: Vec<f64> = Vec::with_capacity(nodes.len() + 1);
    for (i, (&y, &lu)) in nodes.iter().zip(logu).enumerate() {
        let weight = if i == 0 || i == nodes.len() - 1 {
            0.5 * dz
        } else {
            dz
        };
        terms.push(s2a * y + 2.0 * lu + weight.ln());
    }
    // Plateau tail: √2 ∫_{y_max}^{∞} e^{√2αy} dy = √2 e^{√2α y_max}/(−√2α).
    let y_max = *nodes.last().unwrap();
    terms.push(s2a * y_max - (-s2a).ln());
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.iter().map(|&t| (t - m).exp()).sum();
    SQRT_2.ln() + m + sum.ln()
}

/// Compute `Φ(α)` from a solved field by truncated quadrature.
///
/// The time integral runs over the field's stored slices with the exact
/// `s = 0` endpoint `√2∫₀^∞ e^{√2αy}dy = −1/α`; the spatial integral uses the
/// slice windows with the exact plateau continuation on the right. The
/// discarded time tail is estimated from the last slice's decay rate
/// `4γ − (1−α²)` and must stay below 0.1% of `−1/α`.
pub fn phi_alpha(alpha: f64, field: &SolutionField) -> Result<PhiEstimate> {
    if !alpha.is_finite() {
        return Err(Error::InvalidInput("alpha must be finite".into()));
    }
    if alpha >= -GAMMA {
        return Err(Error::Regime(format!(
            "Φ(α) requires α < −γ ≈ −0.4142, got {alpha}; finiteness is only established there"
        )));
    }
    let times = field.times();
    if times.len() < 8 {
        return Err(Error::Coverage(format!(
            "Φ(α) quadrature needs a densely stored field; got {} slices",
            times.len()
        )));
    }
    let dz = field.grid().dz;
    let decay = 4.0 * GAMMA - (1.0 - alpha * alpha);
    if decay <= 0.0 {
        return Err(Error::Regime(format!(
            "time integrand does not decay for alpha={alpha}"
        )));
    }

    // s = 0 endpoint: u(·,0)² is the unit step, the integral is −1/α.
    let mut s_prev = 0.0;
    let mut i_prev = -1.0 / alpha;
    let e_rate = 1.0 - alpha * alpha;
    let mut total = 0.0;
    let mut i_last = i_prev;
    let mut left_edge_estimate = 0.0f64;
    for (k, &s) in times.iter().enumerate() {
        let nodes = field.slice_nodes(k);
        let logu = field.slice_logu(k);
        let log_inner = slice_integral_log(alpha, &nodes, logu, dz);
        let i_s = (e_rate * s + log_inner).exp();
        total += 0.5 * (i_s + i_prev) * (s - s_prev);
        // left-edge truncation: integrand value at the window edge times a
        // Gaussian decay scale √s, accumulated over the time integral
        let edge = (e_rate * s + SQRT_2 * alpha * nodes[0] + 2.0 * logu[0]).exp()
            * SQRT_2
            * s.sqrt().max(dz);
        left_edge_estimate += edge * (s - s_prev);
        s_prev = s;
        i_prev = i_s;
        i_last = i_s;
    }

    let time_tail = i_last / decay;
    let truncation_estimate = time_tail + left_edge_estimate;
    let value = -1.0 / alpha + total;
    let budget = 0.001 * (-1.0 / alpha);
    if truncation_estimate > budget {
        return Err(Error::Coverage(format!(
            "Φ(α) truncation estimate {truncation_estimate:.3e} exceeds 0.1% budget {budget:.3e}; \
             extend the field horizon or window"
        )));
    }
    Ok(PhiEstimate {
        alpha,
        value,
        truncation_estimate,
    })
}
