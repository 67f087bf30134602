//! Joint limit laws of the conditioned branching structure:
//! the high-regime `(ξ, χ, E)` law and the low-regime `(ξ_α, χ_α, E_α)` law.

use crate::math::{normal_cdf, GAMMA, SQRT_2, SQRT_2_GAMMA};
use crate::solver::{SolutionField, WaveProfile};
use crate::{Error, Result};

/// Cumulative `∫_{−∞}^{x} e^{−√2γz} w(z)² dz` over the profile grid with
/// analytic tails on both sides (left `w ≈ A e^{bz}`, right `w ≈ 1`).
fn wave_exp_cumulative(wave: &WaveProfile, x: f64) -> f64 {
    let z = wave.z();
    let w = wave.w();
    let b = wave.left_slope();
    let rate = 2.0 * b - SQRT_2_GAMMA;
    let a = w[0] * (-b * z[0]).exp();
    // left analytic piece up to min(x, z[0])
    let left_to = x.min(z[0]);
    let mut total = if rate > 0.0 {
        a * a * (rate * left_to).exp() / rate
    } else {
        0.0
    };
    if x <= z[0] {
        return total;
    }
    let f = |i: usize| (-SQRT_2_GAMMA * z[i]).exp() * w[i] * w[i];
    let n = z.len();
    for i in 1..n {
        if z[i] <= x {
            total += 0.5 * (f(i) + f(i - 1)) * (z[i] - z[i - 1]);
        } else {
            // partial cell up to x
            let frac = (x - z[i - 1]) / (z[i] - z[i - 1]);
            let fx_w = w[i - 1] + frac * (w[i] - w[i - 1]);
            let fx = (-SQRT_2_GAMMA * x).exp() * fx_w * fx_w;
            total += 0.5 * (fx + f(i - 1)) * (x - z[i - 1]);
            return total;
        }
    }
    // right analytic piece from z_max to x (w ≈ 1)
    let z_hi = z[n - 1];
    total += ((-SQRT_2_GAMMA * z_hi).exp() - (-SQRT_2_GAMMA * x).exp()) / SQRT_2_GAMMA;
    total
}

/// High-regime joint limit CDF
/// `P(ξ ≤ x1)·P(χ ≤ x2, E ≥ x3)` with
/// `P(χ ≤ x, E ≥ y) = (1/(2C⁽¹⁾)) e^{−√2γy} ∫_{−∞}^{x−y} e^{−√2γz} w(z)² dz`.
///
/// `x2` (the χ abscissa) is interpreted in the same frame as the supplied
/// profile (median-centered), and `c1` must be the profile-frame constant, so
/// that the total mass is exactly 1.
pub fn limit_joint_cdf_high(
    x1: f64,
    x2: f64,
    x3: f64,
    wave: &WaveProfile,
    c1: f64,
) -> Result<f64> {
    if x3 < 0.0 {
        return Err(Error::Domain(format!("x3 must be >= 0, got {x3}")));
    }
    if !(c1 > 0.0) {
        return Err(Error::Domain(format!("c1 must be positive, got {c1}")));
    }
    let xi_factor = normal_cdf(x1);
    let chi_e = (1.0 / (2.0 * c1)) * (-SQRT_2_GAMMA * x3).exp() * wave_exp_cumulative(wave, x2 - x3);
    Ok((xi_factor * chi_e).clamp(0.0, 1.0))
}

/// Low-regime joint limit CDF
/// `P(ξ_α ≤ x1, χ_α ≤ x2, E_α ≥ x3)` per the theorem display:
/// `(1/Φ(α))·[1_{x3<x2} ∫_{x3}^{x2} √2 e^{√2αz} dz
///   + √2 ∫₀^{x1} ds ∫_{−∞}^{x2−x3} e^{√2α(x3+z)+(1−α²)s} u(z,s)² dz]`.
///
/// The time integral is truncated at the field horizon (the integrand decays
/// like `e^{(1−α²−4γ)s}`), so `x1` beyond the horizon reads as `∞`.
pub fn limit_joint_cdf_low(
    x1: f64,
    x2: f64,
    x3: f64,
    alpha: f64,
    field: &SolutionField,
    phi: f64,
) -> Result<f64> {
    if !(x1 >= 0.0) {
        return Err(Error::Domain(format!("x1 must be >= 0, got {x1}")));
    }
    if x3 < 0.0 {
        return Err(Error::Domain(format!("x3 must be >= 0, got {x3}")));
    }
    if alpha >= -GAMMA {
        return Err(Error::Regime(format!(
            "low-regime law requires α < −γ, got {alpha}"
        )));
    }
    if !(phi > 0.0) {
        return Err(Error::Domain(format!("phi must be positive, got {phi}")));
    }
    let s2a = SQRT_2 * alpha;

    // Atom part: the no-branch component has χ_α = E_α with density √2|α|e^{√2αz}/(−α√2)…
    // integrated form: ∫_{x3}^{x2} √2 e^{√2αz} dz when x3 < x2.
    let mut total = if x3 < x2 {
        SQRT_2 / (-s2a) * ((s2a * x3).exp() - (s2a * x2).exp())
    } else {
        0.0
    };

    // Branch part: quadrature over stored slices for s ∈ (0, x1], with the
    // exact s = 0 endpoint (u(·,0) is the unit step).
    let e_rate = 1.0 - alpha * alpha;
    let dz = field.grid().dz;
    let zcut = x2 - x3;
    let endpoint = |_s: f64, analytic: bool, k: usize| -> f64 {
        if analytic {
            // √2 ∫_0^{max(0,zcut)} e^{√2αz} dz
            if zcut <= 0.0 {
                0.0
            } else {
                SQRT_2 / (-s2a) * (1.0 - (s2a * zcut).exp())
            }
        } else {
            let nodes = field.slice_nodes(k);
            let logu = field.slice_logu(k);
            let mut terms: Vec<f64> = Vec::new();
            for (i, (&z, &lu)) in nodes.iter().zip(logu).enumerate() {
                if z > zcut {
                    break;
                }
                let weight = if i == 0 { 0.5 * dz } else { dz };
                terms.push(s2a * z + 2.0 * lu + weight.ln());
            }
            if terms.is_empty() {
                return 0.0;
            }
            let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = terms.iter().map(|&t| (t - m).exp()).sum();
            SQRT_2 * (m + sum.ln()).exp()
        }
    };

    let mut s_prev = 0.0;
    let mut i_prev = endpoint(0.0, true, 0);
    let mut branch = 0.0;
    for (k, &s) in field.times().iter().enumerate() {
        if s > x1 + 1e-12 {
            break;
        }
        let i_s = (e_rate * s).exp() * endpoint(s, false, k);
        branch += 0.5 * (i_s + i_prev) * (s - s_prev);
        s_prev = s;
        i_prev = i_s;
    }
    total += (s2a * x3).exp() * branch;

    Ok((total / phi).clamp(0.0, 1.0))
}
