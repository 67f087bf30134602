//! Closed-form quantities: constants, regimes, the rate function, Gaussian
//! tails, asymptotic predictions, limiting laws, and the wave-derived
//! constants.

mod c1;
mod density;
mod gauss;
mod limits;
mod phi;
mod prediction;
mod profile;
mod rate;
mod regime;

pub use c1::{c1_from_wave, c1_in_centering_frame, c2_from_c1, exp_weighted_half_integral, C1Estimate};
pub use density::{trapezoid, xi_critical_density, xi_critical_norm_closed_form, DensityCurve};
pub use gauss::{
    log_normal_cdf, log_normal_pdf, log_normal_sf, normal_cdf, normal_pdf, normal_sf,
    normal_tail_bounds,
};
pub use limits::{limit_joint_cdf_high, limit_joint_cdf_low};
pub use phi::{phi_alpha, PhiEstimate};
pub(crate) use phi::slice_integral_log;
pub use prediction::{
    predict_moderate, predict_near_critical, predict_probability, AsymptoticPrediction,
    PredictionConstants, PredictionForm,
};
pub use profile::{g_argmin, g_profile};
pub use rate::rate_function;
pub use regime::{classify_regime, Regime, RegimeParams};

/// `√2`, the asymptotic front speed.
pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// `γ = √2 − 1`, the location of the lower-deviation phase transition
/// (the critical drift is `α_c = −γ`). Correctly rounded literal: computing
/// `SQRT_2 - 1.0` instead would land one ulp high.
pub const GAMMA: f64 = 0.414_213_562_373_095_048_8;

/// `√2·γ = 2 − √2`, the left-tail decay rate of the travelling wave and the
/// moderate-deviation exponent (correctly rounded literal).
pub const SQRT_2_GAMMA: f64 = 0.585_786_437_626_904_951_2;

/// `q = (3√2 − 1)/4`, the argument of the gamma function in the critical
/// prefactor constant.
pub const Q_CRIT: f64 = (3.0 * SQRT_2 - 1.0) / 4.0;

/// Bramson centering `m_t = √2·t − (3/(2√2))·log t`.
///
/// `u(m_t + z, t) → w(z)` as `t → ∞`, uniformly on compacts.
pub fn bramson_centering(t: f64) -> crate::Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(crate::Error::Domain(format!(
            "bramson_centering requires t > 0, got {t}"
        )));
    }
    Ok(SQRT_2 * t - 3.0 / (2.0 * SQRT_2) * t.ln())
}
