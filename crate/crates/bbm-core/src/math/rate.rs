//! The lower-deviation rate function.

use super::GAMMA;
use crate::{Error, Result};

/// Rate function `ψ(α) = lim (1/t)·log P(M_t ≤ √2αt)`:
///
/// - `0` for `α ≥ 1`,
/// - `−2γ(1−α)` for `−γ ≤ α < 1`,
/// - `−(1+α²)` for `α < −γ`.
///
/// Continuous and non-decreasing; the transition at `−γ` is second-order
/// (matching first derivatives, `2γ = 2|α_c|`).
pub fn rate_function(alpha: f64) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(Error::InvalidInput(format!(
            "rate_function requires finite alpha, got {alpha}"
        )));
    }
    Ok(if alpha >= 1.0 {
        0.0
    } else if alpha >= -GAMMA {
        -2.0 * GAMMA * (1.0 - alpha)
    } else {
        -(1.0 + alpha * alpha)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuity_at_both_boundaries() {
        let eps = 1e-9;
        assert!((rate_function(1.0 - eps).unwrap() - rate_function(1.0).unwrap()).abs() < 1e-8);
        assert!(
            (rate_function(-GAMMA - eps).unwrap() - rate_function(-GAMMA + eps).unwrap()).abs()
                < 1e-8
        );
    }

    #[test]
    fn monotone_on_a_grid() {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=400 {
            let alpha = -3.0 + i as f64 * 0.01125;
            let v = rate_function(alpha).unwrap();
            assert!(v >= prev - 1e-15, "rate function must be non-decreasing");
            prev = v;
        }
    }
}
