//! Drift-parameter classification and derived regime quantities.

use super::{GAMMA, SQRT_2};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Behavioural regime of the lower-deviation event `{M_t ≤ √2αt}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `−γ < α < 1`: branching at an intermediate time, polynomially
    /// corrected exponential decay with rate `2γ(1−α)`.
    High,
    /// `α = −γ`: the second-order transition point, rate `1+γ²`.
    Critical,
    /// `α < −γ`: no branching until the very end, rate `1+α²`.
    Low,
    /// `α ≥ 1`: not a deviation (the probability tends to a positive limit).
    Trivial,
}

/// Drift parameter together with its derived quantities.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegimeParams {
    /// Drift parameter `α` of the threshold `√2αt`.
    pub alpha: f64,
    /// The constant `γ = √2 − 1`.
    pub gamma: f64,
    /// `v_α = (γ+α)/√2`, defined only in the High regime, where it is the
    /// conditional first-branching time fraction `τ/t → λ_α = 1 − v_α`.
    pub v_alpha: Option<f64>,
    /// `λ_α = (1−α)/√2` clipped to `[0,1]`.
    pub lambda_alpha: f64,
    /// Regime tag.
    pub regime: Regime,
    /// Set when `α` was within `1e−12` of `−γ` without being exactly the
    /// symbolic value: the input was classified Critical by proximity.
    pub near_critical_warning: bool,
}

/// Classify a drift parameter and compute its derived quantities.
///
/// The critical regime is measure-zero; inputs within `1e−12` of the
/// symbolic `−γ` (computed once from `√2 − 1`) are classified `Critical`
/// with `near_critical_warning` set.
pub fn classify_regime(alpha: f64) -> Result<RegimeParams> {
    if !alpha.is_finite() {
        return Err(Error::InvalidInput(format!(
            "classify_regime requires finite alpha, got {alpha}"
        )));
    }
    let exact_critical = alpha == -GAMMA;
    let near_critical = (alpha + GAMMA).abs() <= 1e-12;
    let regime = if exact_critical || near_critical {
        Regime::Critical
    } else if alpha >= 1.0 {
        Regime::Trivial
    } else if alpha > -GAMMA {
        Regime::High
    } else {
        Regime::Low
    };
    let v_alpha = match regime {
        Regime::High => Some((GAMMA + alpha) / SQRT_2),
        _ => None,
    };
    let lambda_alpha = ((1.0 - alpha) / SQRT_2).clamp(0.0, 1.0);
    Ok(RegimeParams {
        alpha,
        gamma: GAMMA,
        v_alpha,
        lambda_alpha,
        regime,
        near_critical_warning: near_critical && !exact_critical,
    })
}
