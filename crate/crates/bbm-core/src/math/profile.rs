//! The branching-profile function `g` and its numerical minimizer.

use super::GAMMA;
use crate::{Error, Result};

/// Profile `g_α(u) = (1−u) + (α−u)²/(1−u)` for `u ∈ (0,1)`.
///
/// Heuristically, `u` is the fraction of time the process stays on a single
/// line of descent before branching; the minimum of `g_α` over `u` is the
/// High-regime decay rate.
pub fn g_profile(alpha: f64, u: f64) -> Result<f64> {
    if !alpha.is_finite() || !u.is_finite() {
        return Err(Error::InvalidInput("g_profile requires finite inputs".into()));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("g_profile requires u in (0,1), got {u}")));
    }
    let d = alpha - u;
    Ok((1.0 - u) + d * d / (1.0 - u))
}

/// Numerical minimizer of `g_α` over `(0,1)` by golden-section search.
///
/// Returns `(u*, g_α(u*))`. In the High regime (`−γ < α < 1`) the closed
/// forms are `u* = v_α = (γ+α)/√2` and `min = 2γ(1−α)`; this function finds
/// them numerically so the closed forms can be cross-checked against it.
pub fn g_argmin(alpha: f64) -> Result<(f64, f64)> {
    if !alpha.is_finite() {
        return Err(Error::InvalidInput("g_argmin requires finite alpha".into()));
    }
    if !(alpha > -GAMMA && alpha < 1.0) {
        return Err(Error::Regime(format!(
            "g_argmin is defined for alpha in (-gamma, 1) = ({:.6}, 1), got {alpha}",
            -GAMMA
        )));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-12, 1.0 - 1e-12);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut gc = g_profile(alpha, c)?;
    let mut gd = g_profile(alpha, d)?;
    for _ in 0..120 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g_profile(alpha, c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g_profile(alpha, d)?;
        }
    }
    let u_star = 0.5 * (a + b);
    Ok((u_star, g_profile(alpha, u_star)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::SQRT_2;

    #[test]
    fn closed_forms_match_optimizer() {
        for alpha in [-0.35, -0.1, 0.0, 0.25, 0.6, 0.9] {
            let (u, v) = g_argmin(alpha).unwrap();
            let v_alpha = (GAMMA + alpha) / SQRT_2;
            assert!((u - v_alpha).abs() < 1e-8, "u* vs v_alpha at {alpha}");
            assert!((v - 2.0 * GAMMA * (1.0 - alpha)).abs() < 1e-8, "min vs 2g(1-a) at {alpha}");
        }
    }
}
