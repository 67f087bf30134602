//! Wave-derived prefactor constants.

use crate::math::{Q_CRIT, SQRT_2_GAMMA};
use crate::solver::WaveProfile;
use crate::{Error, Result};
use statrs::function::gamma::gamma;

/// Result of the wave-integral constant, with the share contributed by the
/// analytic tail extensions (a truncation-quality figure).
#[derive(Debug, Clone, Copy)]
pub struct C1Estimate {
    /// `½ ∫ e^{−√2γz} w(z)² dz` in the profile's own abscissa frame.
    pub value: f64,
    /// Fraction of `value` supplied by the analytic tails beyond the grid.
    pub tail_fraction: f64,
}

/// Bare quadrature `½ ∫ e^{−√2γz} w(z)² dz` over the given grid (trapezoid,
/// no tail extensions). Exposed separately so it can be checked against
/// closed forms on synthetic profiles.
pub fn exp_weighted_half_integral(z: &[f64], w: &[f64]) -> Result<f64> {
    if z.len() != w.len() || z.len() < 2 {
        return Err(Error::InvalidInput(
            "profile grid and values must have equal length >= 2".into(),
        ));
    }
    let f: Vec<f64> = z
        .iter()
        .zip(w)
        .map(|(&zi, &wi)| (-SQRT_2_GAMMA * zi).exp() * wi * wi)
        .collect();
    let mut total = 0.0;
    for i in 1..z.len() {
        total += 0.5 * (f[i] + f[i - 1]) * (z[i] - z[i - 1]);
    }
    Ok(0.5 * total)
}

/// Prefactor constant `C⁽¹⁾ = ½ ∫ e^{−√2γz} w(z)² dz` from an extracted wave,
/// in the profile's median-centered frame, with analytic tail corrections:
/// on the left `w(z) ≈ A·e^{b·z}` using the fitted far-left slope, on the
/// right `w ≈ 1`.
///
/// The combined tail share must stay below 0.5% of the result; a larger share
/// means the grid is too short for the budget and is a coverage error.
pub fn c1_from_wave(wave: &WaveProfile) -> Result<C1Estimate> {
    let z = wave.z();
    let w = wave.w();
    let core = exp_weighted_half_integral(z, w)?;

    // Left tail: w(z) = A e^{bz} anchored at the grid's left end.
    let b = wave.left_slope();
    let z_lo = z[0];
    let a = w[0] * (-b * z_lo).exp();
    let rate = 2.0 * b - SQRT_2_GAMMA;
    if rate <= 0.0 {
        return Err(Error::Coverage(format!(
            "left tail decay 2b−√2γ = {rate:.4} not positive; cannot extend the integral"
        )));
    }
    // ½ ∫_{−∞}^{z_lo} e^{−√2γz} A² e^{2bz} dz
    let left_tail = 0.5 * a * a * (rate * z_lo).exp() / rate;

    // Right tail: ½ ∫_{z_hi}^{∞} e^{−√2γz} dz with w ≈ 1.
    let z_hi = *z.last().unwrap();
    let right_tail = 0.5 * (-SQRT_2_GAMMA * z_hi).exp() / SQRT_2_GAMMA;

    let value = core + left_tail + right_tail;
    let tail_fraction = (left_tail + right_tail) / value;
    if !(tail_fraction < 0.005) {
        return Err(Error::Coverage(format!(
            "tail share {:.3}% exceeds the 0.5% truncation budget; extend the wave grid",
            tail_fraction * 100.0
        )));
    }

    // Decay guard: the integrand must be negligible at both grid ends.
    let integrand = |i: usize| (-SQRT_2_GAMMA * z[i]).exp() * w[i] * w[i];
    let peak = (0..z.len()).map(integrand).fold(f64::MIN, f64::max);
    let ends = integrand(0).max(integrand(z.len() - 1));
    if ends > 1e-2 * peak {
        return Err(Error::Coverage(format!(
            "integrand at grid ends is {:.1e} of its max; grid too short",
            ends / peak
        )));
    }

    Ok(C1Estimate {
        value,
        tail_fraction,
    })
}

/// Convert the median-frame constant to the `m_t`-centering frame.
///
/// An extracted profile is centered at its median; the asymptotic laws center
/// at `m_t`. With `Δ = median − m_t` (stabilized for large source times) the
/// frames differ by `e^{−√2γΔ}` in the exponentially weighted integral.
pub fn c1_in_centering_frame(c1_profile_frame: f64, median_offset: f64) -> f64 {
    (-SQRT_2_GAMMA * median_offset).exp() * c1_profile_frame
}

/// Critical prefactor from the high-regime one:
/// `C⁽²⁾ = C⁽¹⁾·Γ(q)/(√(2π)·2^q)` with `q = (3√2−1)/4`.
pub fn c2_from_c1(c1: f64) -> Result<f64> {
    if !(c1 > 0.0) || !c1.is_finite() {
        return Err(Error::Domain(format!(
            "c2_from_c1 requires c1 > 0, got {c1}"
        )));
    }
    let q = Q_CRIT;
    Ok(c1 * gamma(q) / ((2.0 * std::f64::consts::PI).sqrt() * 2f64.powf(q)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile_matches_closed_form() {
        // w ≡ 1 on [−1, 1]: ½∫ e^{−√2γz} dz = sinh(√2γ)/√2γ
        let n = 20_001;
        let z: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        let w = vec![1.0; n];
        let got = exp_weighted_half_integral(&z, &w).unwrap();
        let expect = (SQRT_2_GAMMA.sinh()) / SQRT_2_GAMMA;
        assert!(
            (got - expect).abs() < 1e-8,
            "quadrature {got} vs closed form {expect}"
        );
    }

    #[test]
    fn frame_conversion_is_exponential() {
        let c = c1_in_centering_frame(1.0, -1.5);
        assert!((c - (SQRT_2_GAMMA * 1.5).exp()).abs() < 1e-14);
        // zero offset is the identity
        assert_eq!(c1_in_centering_frame(0.817, 0.0), 0.817);
    }

    #[test]
    fn c2_rejects_nonpositive() {
        assert!(c2_from_c1(0.0).is_err());
        assert!(c2_from_c1(f64::NAN).is_err());
        assert!(c2_from_c1(1.0).is_ok());
    }
}
