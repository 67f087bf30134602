//! Standard normal density, distribution, survival functions and the
//! classical tail sandwich, all accurate in log-domain far beyond the range
//! where the linear-domain values underflow.

use crate::{Error, Result};
use libm::erfc;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8; // ln(sqrt(2*pi))
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal density `φ(x)`.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// `log φ(x)`.
pub fn log_normal_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Standard normal CDF `Φ(x)`, computed through the complementary error
/// function so both tails keep full relative accuracy until underflow.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal survival function `Φ̄(x) = P(N(0,1) > x)`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `log Φ̄(x)`, finite for all finite `x` (asymptotic expansion past the
/// linear-domain underflow at `x ≈ 37.5`).
pub fn log_normal_sf(x: f64) -> f64 {
    if x < 34.0 {
        let v = normal_sf(x);
        if v > 0.0 {
            return v.ln();
        }
    }
    // Φ̄(x) = φ(x)/x · (1 − 1/x² + 3/x⁴ − 15/x⁶ + O(x⁻⁸)), x → ∞
    let x2 = x * x;
    log_normal_pdf(x) - x.ln() + (-1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2)).ln_1p()
}

/// `log Φ(x)`, finite for all finite `x`.
pub fn log_normal_cdf(x: f64) -> f64 {
    log_normal_sf(-x)
}

/// The classical Gaussian tail sandwich at `z > 0`:
/// `upper·(1 − 2z⁻²) ≤ Φ̄(z) ≤ upper` with `upper = e^{−z²/2}/(z√(2π))`.
///
/// Returns `(lower, exact, upper)`. The sandwich is informative for
/// `z > √2`; below that the lower bound is non-positive and the chain holds
/// trivially.
pub fn normal_tail_bounds(z: f64) -> Result<(f64, f64, f64)> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!(
            "normal_tail_bounds requires z > 0, got {z}"
        )));
    }
    let upper = (log_normal_pdf(z) - z.ln()).exp();
    let lower = upper * (1.0 - 2.0 / (z * z));
    let exact = normal_sf(z);
    Ok((lower, exact, upper))
}
