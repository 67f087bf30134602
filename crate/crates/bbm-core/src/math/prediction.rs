//! Regime-matched asymptotic predictions for the lower-deviation
//! probability `P(M_t ≤ √2αt)` and its moderate / near-critical variants.

use super::{rate_function, Regime, RegimeParams, GAMMA, SQRT_2_GAMMA};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which asymptotic formula the prediction instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PredictionForm {
    /// The regime-matched `P(M_t ≤ √2αt)` asymptotic.
    Regime,
    /// Moderate deviations `P(M_t ≤ m_t − a) ≈ C⁽¹⁾e^{−√2γa}` (t-free).
    Moderate { a: f64 },
    /// Near-critical window `P(M_t ≤ −√2γt + a_t) ≈ C⁽²⁾t^{3γ/4}e^{−(1+γ²)t + √2γ·a_t}`,
    /// valid for `a_t = o(√t)`.
    NearCritical { a_t: f64 },
}

/// Constants feeding the prediction formulas; supply the ones the target
/// regime needs.
#[derive(Debug, Clone, Copy, Default)]
pub struct PredictionConstants {
    /// `C⁽¹⁾ = ½∫e^{−√2γz}w(z)²dz` (High regime, moderate deviations).
    pub c1: Option<f64>,
    /// `C⁽²⁾ = C⁽¹⁾·Γ(q)/(√(2π)2^q)` (Critical regime).
    pub c2: Option<f64>,
    /// `Φ(α)` (Low regime; α-dependent).
    pub phi: Option<f64>,
}

/// A concrete asymptotic prediction `exp(log_c + p·log t + r·t)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AsymptoticPrediction {
    /// Regime the prediction belongs to.
    pub regime: Regime,
    /// Coefficient of `t` in the log-probability (equals the rate function
    /// value `ψ(α)` for regime-form predictions).
    pub exp_rate: f64,
    /// Exponent of `t` in the polynomial prefactor.
    pub poly_exponent: f64,
    /// Multiplicative constant actually used (resolved from the inputs).
    pub constant: Option<f64>,
    /// Formula variant.
    pub form: PredictionForm,
    /// Additive log-domain constant (log of `constant` plus any fixed,
    /// t-free contributions such as `(3γ/2)·log v_α` or `√2γ·a_t`).
    log_offset: f64,
}

impl AsymptoticPrediction {
    /// Log of the predicted probability at time `t`.
    pub fn log_evaluate(&self, t: f64) -> Result<f64> {
        if !(t > 1.0) {
            return Err(Error::Domain(format!(
                "prediction validity floor is t > 1, got {t}"
            )));
        }
        Ok(self.log_offset + self.poly_exponent * t.ln() + self.exp_rate * t)
    }

    /// Predicted probability at time `t` (validity floor `t > 1`).
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        Ok(self.log_evaluate(t)?.exp())
    }
}

/// The regime-matched asymptotic for `P(M_t ≤ √2αt)`:
///
/// - High: `C⁽¹⁾(v_α t)^{3γ/2}·e^{−2γ(1−α)t}`
/// - Low: `(Φ(α)/√(4π))·t^{−1/2}·e^{−(1+α²)t}`
/// - Critical: `C⁽²⁾·t^{3γ/4}·e^{−(1+γ²)t}`
///
/// `t` is accepted here only to validate the floor; the returned object
/// evaluates at any `t > 1`.
pub fn predict_probability(
    params: &RegimeParams,
    t: f64,
    constants: &PredictionConstants,
) -> Result<AsymptoticPrediction> {
    if !(t > 1.0) {
        return Err(Error::Domain(format!("predictions require t > 1, got {t}")));
    }
    let exp_rate = rate_function(params.alpha)?;
    match params.regime {
        Regime::High => {
            let c1 = constants.c1.ok_or_else(|| {
                Error::Configuration("High-regime prediction requires C1".into())
            })?;
            let v = params.v_alpha.expect("High regime carries v_alpha");
            let poly = 1.5 * GAMMA;
            Ok(AsymptoticPrediction {
                regime: params.regime,
                exp_rate,
                poly_exponent: poly,
                constant: Some(c1),
                form: PredictionForm::Regime,
                log_offset: c1.ln() + poly * v.ln(),
            })
        }
        Regime::Low => {
            let phi = constants.phi.ok_or_else(|| {
                Error::Configuration("Low-regime prediction requires Phi(alpha)".into())
            })?;
            Ok(AsymptoticPrediction {
                regime: params.regime,
                exp_rate,
                poly_exponent: -0.5,
                constant: Some(phi),
                form: PredictionForm::Regime,
                log_offset: phi.ln() - (4.0 * std::f64::consts::PI).sqrt().ln(),
            })
        }
        Regime::Critical => {
            let c2 = constants.c2.ok_or_else(|| {
                Error::Configuration("Critical-regime prediction requires C2".into())
            })?;
            Ok(AsymptoticPrediction {
                regime: params.regime,
                exp_rate,
                poly_exponent: 0.75 * GAMMA,
                constant: Some(c2),
                form: PredictionForm::Regime,
                log_offset: c2.ln(),
            })
        }
        Regime::Trivial => Err(Error::Regime(
            "alpha >= 1 is not a deviation event (probability tends to a positive limit)".into(),
        )),
    }
}

/// Moderate-deviation prediction `P(M_t ≤ m_t − a) ≈ C⁽¹⁾e^{−√2γa}`
/// (valid as `a → ∞`, `a = o(t)`; t-free).
pub fn predict_moderate(c1: f64, a: f64) -> Result<AsymptoticPrediction> {
    if !(c1 > 0.0) {
        return Err(Error::Domain("moderate prediction requires C1 > 0".into()));
    }
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("moderate prediction requires a >= 0, got {a}")));
    }
    Ok(AsymptoticPrediction {
        regime: Regime::High,
        exp_rate: 0.0,
        poly_exponent: 0.0,
        constant: Some(c1),
        form: PredictionForm::Moderate { a },
        log_offset: c1.ln() - SQRT_2_GAMMA * a,
    })
}

/// Near-critical prediction
/// `P(M_t ≤ −√2γt + a_t) ≈ C⁽²⁾t^{3γ/4}e^{−(1+γ²)t + √2γa_t}` for `a_t = o(√t)`.
pub fn predict_near_critical(c2: f64, a_t: f64) -> Result<AsymptoticPrediction> {
    if !(c2 > 0.0) {
        return Err(Error::Domain("near-critical prediction requires C2 > 0".into()));
    }
    if !a_t.is_finite() {
        return Err(Error::Domain("near-critical prediction requires finite a_t".into()));
    }
    Ok(AsymptoticPrediction {
        regime: Regime::Critical,
        exp_rate: -(1.0 + GAMMA * GAMMA),
        poly_exponent: 0.75 * GAMMA,
        constant: Some(c2),
        form: PredictionForm::NearCritical { a_t },
        log_offset: c2.ln() + SQRT_2_GAMMA * a_t,
    })
}

#[cfg(test)]
mod tests {
    use super::super::classify_regime;
    use super::*;

    #[test]
    fn exp_rate_equals_rate_function() {
        let consts = PredictionConstants {
            c1: Some(2.0),
            c2: Some(0.5),
            phi: Some(2.3),
        };
        for alpha in [-1.5, -1.0, -GAMMA, 0.0, 0.5, 0.9] {
            let p = classify_regime(alpha).unwrap();
            let pred = predict_probability(&p, 10.0, &consts).unwrap();
            assert_eq!(pred.exp_rate, rate_function(alpha).unwrap());
        }
    }

    #[test]
    fn low_regime_example() {
        // Low, alpha=-1, t=10, Phi given: (Phi/sqrt(4 pi)) 10^{-1/2} e^{-20}
        let p = classify_regime(-1.0).unwrap();
        let phi = 2.289;
        let pred = predict_probability(
            &p,
            10.0,
            &PredictionConstants {
                phi: Some(phi),
                ..Default::default()
            },
        )
        .unwrap();
        let expect = phi / (4.0 * std::f64::consts::PI).sqrt() * 10f64.powf(-0.5) * (-20f64).exp();
        let got = pred.evaluate(10.0).unwrap();
        assert!((got / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn high_regime_log_slope() {
        // d/dt log prediction -> exp_rate for large t (poly term decays)
        let p = classify_regime(0.0).unwrap();
        let pred = predict_probability(
            &p,
            10.0,
            &PredictionConstants {
                c1: Some(2.0),
                ..Default::default()
            },
        )
        .unwrap();
        let slope = (pred.log_evaluate(1e6 + 1.0).unwrap() - pred.log_evaluate(1e6).unwrap()) / 1.0;
        assert!((slope - pred.exp_rate).abs() < 1e-5);
        assert!((pred.exp_rate + 2.0 * GAMMA).abs() < 1e-15);
    }

    #[test]
    fn missing_constant_is_configuration_error() {
        let p = classify_regime(0.0).unwrap();
        let err = predict_probability(&p, 10.0, &PredictionConstants::default());
        assert!(matches!(err, Err(Error::Configuration(_))));
    }

    #[test]
    fn trivial_regime_unsupported() {
        let p = classify_regime(1.5).unwrap();
        assert!(predict_probability(&p, 10.0, &PredictionConstants::default()).is_err());
    }
}
