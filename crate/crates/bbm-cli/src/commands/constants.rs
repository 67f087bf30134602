//! `constants` — tabulate regime parameters and multiplicative constants
//! over a drift-parameter list.
//! `predict` — evaluate the regime-matched asymptotic formula over a time
//! list.

use super::solve::{load_field_input, load_wave_input};
use super::{disp, Ctx, Outcome};
use crate::manifest::{write_csv_table, ManifestBuilder};
use bbm_core::io::write_json;
use bbm_core::math::{
    classify_regime, phi_alpha, predict_moderate, predict_near_critical, predict_probability,
    rate_function, PredictionConstants, Regime,
};
use bbm_core::{Error, Result};
use serde::Serialize;

/// One row of the constants table. Entries that do not exist in a regime
/// (e.g. `v_alpha` off the high regime, `phi` off the low regime) are null.
#[derive(Debug, Clone, Serialize)]
struct ConstantsRow {
    alpha: f64,
    regime: String,
    /// Exponential rate of `P(M_t ≤ √2αt)` (negative).
    psi: f64,
    v_alpha: Option<f64>,
    lambda_alpha: f64,
    c1: f64,
    c2: f64,
    phi: Option<f64>,
    phi_truncation_fraction: Option<f64>,
}

fn opt_str(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn run_constants(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx
        .config
        .constants
        .as_ref()
        .expect("dispatcher checked section");
    if cfg.alphas.is_empty() {
        return Err(Error::Configuration("alphas must be non-empty".into()));
    }
    let mut mb = ManifestBuilder::new("constants");
    // The table always carries the wave constants (they are α-free columns).
    let wave = load_wave_input(&cfg.wave, "the constants table (C1/C2 columns)", &mut mb)?;

    let need_phi = cfg
        .alphas
        .iter()
        .any(|&a| matches!(classify_regime(a).map(|p| p.regime), Ok(Regime::Low)));
    let field = if need_phi {
        Some(load_field_input(
            &cfg.field,
            "Φ(α) for the low-regime rows",
            &mut mb,
        )?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(cfg.alphas.len());
    let mut violations = Vec::new();
    for &alpha in &cfg.alphas {
        let params = classify_regime(alpha)?;
        let psi = rate_function(alpha)?;
        let (phi, phi_fraction) = if params.regime == Regime::Low {
            let estimate = phi_alpha(alpha, field.as_ref().expect("loaded above"))?;
            // Output validation: the integral term is strictly positive, so
            // Φ(α) must exceed its no-branch atom −1/α.
            if estimate.value <= -1.0 / alpha {
                violations.push(format!(
                    "Φ({alpha}) = {} does not exceed its atom {}",
                    estimate.value,
                    -1.0 / alpha
                ));
            }
            (Some(estimate.value), Some(estimate.truncation_fraction()))
        } else {
            (None, None)
        };
        rows.push(ConstantsRow {
            alpha,
            regime: format!("{:?}", params.regime).to_lowercase(),
            psi,
            v_alpha: params.v_alpha,
            lambda_alpha: params.lambda_alpha,
            c1: wave.c1,
            c2: wave.c2,
            phi,
            phi_truncation_fraction: phi_fraction,
        });
    }
    mb.steps(rows.len() as u64);

    let csv_path = ctx.out.file(&format!("{}.csv", cfg.artifact))?;
    write_csv_table(
        &csv_path,
        &[
            "alpha",
            "regime",
            "psi",
            "v_alpha",
            "lambda_alpha",
            "c1",
            "c2",
            "phi",
            "phi_truncation_fraction",
        ],
        rows.iter().map(|r| {
            vec![
                r.alpha.to_string(),
                r.regime.clone(),
                r.psi.to_string(),
                opt_str(r.v_alpha),
                r.lambda_alpha.to_string(),
                r.c1.to_string(),
                r.c2.to_string(),
                opt_str(r.phi),
                opt_str(r.phi_truncation_fraction),
            ]
        }),
    )?;
    mb.output("constants-table", &csv_path)?;
    let json_path = ctx.out.file(&format!("{}.json", cfg.artifact))?;
    write_json(&json_path, &rows)?;
    mb.output("constants-summary", &json_path)?;
    let manifest_path = mb.write(&ctx.out, &ctx.flags, &ctx.config_text)?;

    println!(
        "{:>10} {:>9} {:>10} {:>8} {:>8} {:>9} {:>9} {:>10} {:>8}",
        "alpha", "regime", "psi", "v", "lambda", "c1", "c2", "phi", "trunc"
    );
    for r in &rows {
        println!(
            "{:>10} {:>9} {:>10} {:>8} {:>8} {:>9} {:>9} {:>10} {:>8}",
            format!("{:.4}", r.alpha),
            r.regime,
            format!("{:.5}", r.psi),
            r.v_alpha.map(|v| format!("{v:.4}")).unwrap_or_default(),
            format!("{:.4}", r.lambda_alpha),
            format!("{:.4}", r.c1),
            format!("{:.4}", r.c2),
            r.phi.map(|v| format!("{v:.5}")).unwrap_or_default(),
            r.phi_truncation_fraction
                .map(|v| format!("{v:.1e}"))
                .unwrap_or_default(),
        );
    }
    println!("manifest: {}", manifest_path.display());
    if violations.is_empty() {
        Ok(Outcome::Pass)
    } else {
        for v in &violations {
            eprintln!("validation failure: {v}");
        }
        Ok(Outcome::CheckFailure)
    }
}

#[derive(Debug, Clone, Serialize)]
struct PredictSummary {
    mode: String,
    alpha: Option<f64>,
    a: Option<f64>,
    c1: Option<f64>,
    c2: Option<f64>,
    phi: Option<f64>,
    rows: Vec<PredictRow>,
}

#[derive(Debug, Clone, Serialize)]
struct PredictRow {
    t: f64,
    log_probability: f64,
    probability: f64,
}

pub fn run_predict(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx
        .config
        .predict
        .as_ref()
        .expect("dispatcher checked section");
    if cfg.times.is_empty() {
        return Err(Error::Configuration("times must be non-empty".into()));
    }
    let mut mb = ManifestBuilder::new("predict");

    // Constants resolve literal-first, then from artifacts.
    let mut c1 = cfg.c1;
    let mut c2 = cfg.c2;
    let mut phi = cfg.phi;
    let needs_wave = |c1: Option<f64>, c2: Option<f64>, mode: &str, regime: Option<Regime>| {
        match mode {
            "moderate" => c1.is_none(),
            "near-critical" => c2.is_none(),
            _ => matches!(
                (regime, c1, c2),
                (Some(Regime::High), None, _) | (Some(Regime::Critical), _, None)
            ),
        }
    };

    let prediction = match cfg.mode.as_str() {
        "line" => {
            let alpha = cfg.alpha.ok_or_else(|| {
                Error::Configuration("line mode requires alpha".into())
            })?;
            let params = classify_regime(alpha)?;
            if needs_wave(c1, c2, "line", Some(params.regime)) {
                let wave = load_wave_input(&cfg.wave, "this prediction", &mut mb)?;
                c1 = c1.or(Some(wave.c1));
                c2 = c2.or(Some(wave.c2));
            }
            if params.regime == Regime::Low && phi.is_none() {
                let field = load_field_input(&cfg.field, "the low-regime constant Φ(α)", &mut mb)?;
                phi = Some(phi_alpha(alpha, &field)?.value);
            }
            predict_probability(&params, *cfg.times.last().unwrap(), &PredictionConstants {
                c1,
                c2,
                phi,
            })?
        }
        "moderate" => {
            let a = cfg.a.ok_or_else(|| {
                Error::Configuration("moderate mode requires the deviation a".into())
            })?;
            if needs_wave(c1, c2, "moderate", None) {
                let wave = load_wave_input(&cfg.wave, "this prediction", &mut mb)?;
                c1 = c1.or(Some(wave.c1));
            }
            predict_moderate(c1.expect("resolved above"), a)?
        }
        "near-critical" => {
            let a = cfg.a.ok_or_else(|| {
                Error::Configuration("near-critical mode requires the deviation a".into())
            })?;
            if needs_wave(c1, c2, "near-critical", None) {
                let wave = load_wave_input(&cfg.wave, "this prediction", &mut mb)?;
                c2 = c2.or(Some(wave.c2));
            }
            predict_near_critical(c2.expect("resolved above"), a)?
        }
        other => {
            return Err(Error::Configuration(format!(
                "unknown predict mode '{other}' (expected 'line', 'moderate' or 'near-critical')"
            )))
        }
    };

    let mut rows = Vec::with_capacity(cfg.times.len());
    for &t in &cfg.times {
        let log_p = prediction.log_evaluate(t)?;
        rows.push(PredictRow {
            t,
            log_probability: log_p,
            probability: log_p.exp(),
        });
    }
    mb.steps(rows.len() as u64);

    let csv_path = ctx.out.file(&format!("{}.csv", cfg.artifact))?;
    write_csv_table(
        &csv_path,
        &["t", "log_probability", "probability"],
        rows.iter().map(|r| {
            vec![
                r.t.to_string(),
                r.log_probability.to_string(),
                r.probability.to_string(),
            ]
        }),
    )?;
    mb.output("prediction-curve", &csv_path)?;
    let summary = PredictSummary {
        mode: cfg.mode.clone(),
        alpha: cfg.alpha,
        a: cfg.a,
        c1,
        c2,
        phi,
        rows,
    };
    let json_path = ctx.out.file(&format!("{}.json", cfg.artifact))?;
    write_json(&json_path, &summary)?;
    mb.output("prediction-summary", &json_path)?;
    let manifest_path = mb.write(&ctx.out, &ctx.flags, &ctx.config_text)?;

    println!("prediction mode = {}", summary.mode);
    for r in &summary.rows {
        println!(
            "  t = {:>7}   log p = {:>14}   p = {}",
            r.t,
            format!("{:.6}", r.log_probability),
            disp(r.probability)
        );
    }
    println!("manifest: {}", manifest_path.display());
    Ok(Outcome::Pass)
}
