//! `verify` — audit solved artifacts against exact identities, limit laws
//! and inequality bounds, emitting machine/human reports and plot-ready
//! curves.
//!
//! Suites:
//! - `bounds`      — inequality audit of a solved field.
//! - `rate`        — decay-rate curve over a drift grid, with a read-back
//!                   round-trip check and boundary identities.
//! - `agreement`   — two independently solved fields compared on their
//!                   shared window (sup-difference ≤ 1e−3).
//! - `high` / `low` / `critical` — prefactor-stabilization diagnostics of
//!                   the regime asymptotics, plus the R(t) curve.
//! - `moderate`    — fixed-t deviation ratios against `C⁽¹⁾e^{−√2γa}`.
//! - `laws`        — a conditioned batch against the exact finite-t
//!                   conditional law and the limit laws, plus the
//!                   branch-time density curve.

use super::solve::{load_field_input, load_wave_input};
use super::{Ctx, Outcome};
use crate::manifest::{write_csv_table, ManifestBuilder, SourceRun};
use bbm_core::io::{atomic_write, load_batch};
use bbm_core::math::{
    bramson_centering, classify_regime, phi_alpha, predict_probability, rate_function,
    AsymptoticPrediction, PredictionConstants, GAMMA, SQRT_2, SQRT_2_GAMMA,
};
use bbm_core::solver::{conditional_first_branch, SolutionField};
use bbm_core::verify::{
    bound_audit, conditional_law_suite, moderate_deviation_check, ratio_diagnostic_critical,
    ratio_diagnostic_high, ratio_diagnostic_low, render_table, reports_to_json, suite_passes,
    ComparisonReport, LimitLawInputs, ReportMeta,
};
use bbm_core::{Error, Result};
use std::fs;
use std::path::PathBuf;

/// Write one plot-ready CSV and record it in the manifest.
fn write_curve(
    ctx: &Ctx,
    mb: &mut ManifestBuilder,
    artifact: &str,
    name: &str,
    header: &[&str],
    rows: Vec<Vec<String>>,
) -> Result<PathBuf> {
    let path = ctx.out.file(&format!("{artifact}-{name}.csv"))?;
    write_csv_table(&path, header, rows)?;
    mb.output(&format!("curve-{name}"), &path)?;
    Ok(path)
}

/// R(t) = u(threshold(t), t) / prediction(t), evaluated in the log domain.
fn ratio_rows(
    field: &SolutionField,
    prediction: &AsymptoticPrediction,
    threshold: impl Fn(f64) -> f64,
    times: &[f64],
) -> Result<Vec<Vec<String>>> {
    times
        .iter()
        .map(|&t| {
            let (_, log_u) = field.evaluate(threshold(t), t)?;
            let r = (log_u - prediction.log_evaluate(t)?).exp();
            Ok(vec![t.to_string(), r.to_string()])
        })
        .collect()
}

fn default_times(times: &Option<Vec<f64>>) -> Vec<f64> {
    times.clone().unwrap_or_else(|| vec![20.0, 30.0, 40.0])
}

pub fn run_verify(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx
        .config
        .verify
        .as_ref()
        .expect("dispatcher checked section");
    let mut mb = ManifestBuilder::new("verify");
    let artifact = cfg.artifact.as_str();

    let reports: Vec<ComparisonReport> = match cfg.suite.as_str() {
        "bounds" => {
            let field = load_field_input(&cfg.field, "the bounds audit", &mut mb)?;
            bound_audit(&field)?
        }
        "rate" => suite_rate(ctx, &mut mb, artifact, &cfg.alpha_grid)?,
        "agreement" => suite_agreement(ctx, &mut mb, artifact, cfg)?,
        "high" => {
            let field = load_field_input(&cfg.field, "the high-regime diagnostic", &mut mb)?;
            let wave = load_wave_input(&cfg.wave, "the high-regime diagnostic", &mut mb)?;
            let alpha = cfg.alpha.unwrap_or(0.0);
            let times = default_times(&cfg.times);
            let prediction = predict_probability(
                &classify_regime(alpha)?,
                *times.last().unwrap(),
                &PredictionConstants {
                    c1: Some(wave.c1),
                    ..Default::default()
                },
            )?;
            let rows = ratio_rows(&field, &prediction, |t| SQRT_2 * alpha * t, &times)?;
            write_curve(ctx, &mut mb, artifact, "ratio", &["t", "R"], rows)?;
            ratio_diagnostic_high(&field, alpha, wave.c1, &times)?
        }
        "low" => {
            let field = load_field_input(&cfg.field, "the low-regime diagnostic", &mut mb)?;
            let alpha = cfg.alpha.unwrap_or(-1.0);
            let times = default_times(&cfg.times);
            let phi = phi_alpha(alpha, &field)?;
            let prediction = predict_probability(
                &classify_regime(alpha)?,
                *times.last().unwrap(),
                &PredictionConstants {
                    phi: Some(phi.value),
                    ..Default::default()
                },
            )?;
            let rows = ratio_rows(&field, &prediction, |t| SQRT_2 * alpha * t, &times)?;
            write_curve(ctx, &mut mb, artifact, "ratio", &["t", "R"], rows)?;
            ratio_diagnostic_low(&field, alpha, phi.value, &times)?
        }
        "critical" => {
            let field = load_field_input(&cfg.field, "the critical-regime diagnostic", &mut mb)?;
            let wave = load_wave_input(&cfg.wave, "the critical-regime diagnostic", &mut mb)?;
            let times = default_times(&cfg.times);
            let prediction = predict_probability(
                &classify_regime(-GAMMA)?,
                *times.last().unwrap(),
                &PredictionConstants {
                    c2: Some(wave.c2),
                    ..Default::default()
                },
            )?;
            let rows = ratio_rows(&field, &prediction, |t| -SQRT_2 * GAMMA * t, &times)?;
            write_curve(ctx, &mut mb, artifact, "ratio", &["t", "R"], rows)?;
            ratio_diagnostic_critical(&field, wave.c2, &times)?
        }
        "moderate" => {
            let field = load_field_input(&cfg.field, "the moderate-deviation check", &mut mb)?;
            let wave = load_wave_input(&cfg.wave, "the moderate-deviation check", &mut mb)?;
            let t = cfg.t.unwrap_or(40.0);
            let a_values = cfg.a_values.clone().unwrap_or_else(|| vec![5.0, 6.0, 7.0]);
            let m_t = bramson_centering(t)?;
            let rows = a_values
                .iter()
                .map(|&a| {
                    let (_, log_u) = field.evaluate(m_t - a, t)?;
                    let ratio = (log_u - (wave.c1.ln() - SQRT_2_GAMMA * a)).exp();
                    Ok(vec![a.to_string(), ratio.to_string()])
                })
                .collect::<Result<Vec<_>>>()?;
            write_curve(ctx, &mut mb, artifact, "deviation-ratio", &["a", "ratio"], rows)?;
            moderate_deviation_check(&field, wave.c1, t, &a_values)?
        }
        "laws" => suite_laws(ctx, &mut mb, artifact, cfg)?,
        other => {
            return Err(Error::Configuration(format!(
                "unknown suite '{other}' (expected bounds, rate, agreement, high, low, \
                 critical, moderate or laws)"
            )))
        }
    };
    mb.steps(reports.len() as u64);

    let json_path = ctx.out.file(&format!("{artifact}.json"))?;
    atomic_write(&json_path, reports_to_json(&reports)?.as_bytes())?;
    mb.output("reports", &json_path)?;
    let table = render_table(&reports);
    let text_path = ctx.out.file(&format!("{artifact}.txt"))?;
    atomic_write(&text_path, table.as_bytes())?;
    mb.output("reports-text", &text_path)?;
    let manifest_path = mb.write(&ctx.out, &ctx.flags, &ctx.config_text)?;

    print!("{table}");
    println!("manifest: {}", manifest_path.display());
    if suite_passes(&reports) {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::CheckFailure)
    }
}

/// Decay-rate curve: emit, read back bit-exactly, and check the closed-form
/// values at and across the regime boundary.
fn suite_rate(
    ctx: &Ctx,
    mb: &mut ManifestBuilder,
    artifact: &str,
    alpha_grid: &Option<[f64; 3]>,
) -> Result<Vec<ComparisonReport>> {
    let [lo, hi, step] = alpha_grid.unwrap_or([-2.0, 0.9, 0.05]);
    if !(step > 0.0 && lo < hi && hi < 1.0) {
        return Err(Error::Configuration(format!(
            "alpha_grid must satisfy min < max < 1 with step > 0, got [{lo}, {hi}, {step}]"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut alphas: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    if *alphas.last().unwrap() < hi - 1e-12 {
        alphas.push(hi);
    }
    let rows = alphas
        .iter()
        .map(|&a| Ok(vec![a.to_string(), rate_function(a)?.to_string()]))
        .collect::<Result<Vec<_>>>()?;
    let path = write_curve(ctx, mb, artifact, "rate", &["alpha", "psi"], rows)?;

    // Read the emitted curve back; shortest round-trip decimal means the
    // parsed values must equal the recomputed ones bit for bit.
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(fs::read(&path)?.as_slice());
    let mut max_diff = 0.0f64;
    let mut rows_read = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Integrity(format!("malformed curve: {e}")))?;
        let alpha: f64 = record[0]
            .parse()
            .map_err(|_| Error::Integrity("malformed alpha in curve".into()))?;
        let psi: f64 = record[1]
            .parse()
            .map_err(|_| Error::Integrity("malformed psi in curve".into()))?;
        max_diff = max_diff.max((psi - rate_function(alpha)?).abs());
        rows_read += 1;
    }
    let meta = |note: &str| ReportMeta {
        note: Some(note.to_string()),
        ..Default::default()
    };
    let gamma2 = GAMMA * GAMMA;
    Ok(vec![
        ComparisonReport::two_sided(
            "rate/curve-round-trip",
            max_diff,
            0.0,
            0.0,
            meta(&format!("{rows_read} grid points re-parsed")),
        ),
        ComparisonReport::two_sided(
            "rate/boundary-continuity",
            rate_function(-GAMMA - 1e-9)? - rate_function(-GAMMA + 1e-9)?,
            0.0,
            1e-6,
            meta("second-order transition: continuous across the regime boundary"),
        ),
        ComparisonReport::two_sided(
            "rate/critical-value",
            rate_function(-GAMMA)?,
            -(1.0 + gamma2),
            1e-15,
            meta("closed form at the boundary"),
        ),
    ])
}

/// Sup-difference between two independently produced fields on the shared
/// window, per shared time.
fn suite_agreement(
    ctx: &Ctx,
    mb: &mut ManifestBuilder,
    artifact: &str,
    cfg: &crate::config::VerifyConfig,
) -> Result<Vec<ComparisonReport>> {
    let field_a = load_field_input(&cfg.field, "the agreement check", mb)?;
    let field_b = load_field_input(&cfg.field_b, "the agreement check (second field)", mb)?;
    let [z_lo, z_hi] = cfg.agreement_window.unwrap_or([-15.0, 15.0]);
    let shared: Vec<f64> = field_a
        .times()
        .iter()
        .copied()
        .filter(|&t| field_b.times().iter().any(|&s| (s - t).abs() < 1e-9))
        .collect();
    if shared.is_empty() {
        return Err(Error::Configuration(
            "the two fields store no common slice time".into(),
        ));
    }
    let mut reports = Vec::new();
    let mut last_rows = Vec::new();
    for &t in &shared {
        let slice = field_a.slice_index(t)?;
        let nodes = field_a.slice_nodes(slice);
        let mut sup = 0.0f64;
        let mut rows = Vec::new();
        for &z in nodes.iter().filter(|&&z| (z_lo..=z_hi).contains(&z)) {
            let (ua, _) = field_a.evaluate(z, t)?;
            let (ub, _) = field_b.evaluate(z, t)?;
            let diff = (ua - ub).abs();
            sup = sup.max(diff);
            rows.push(vec![z.to_string(), diff.to_string()]);
        }
        reports.push(ComparisonReport::upper_bound(
            format!("agreement/sup-diff(t={t})"),
            sup,
            1e-3,
            ReportMeta {
                t: Some(t),
                grid: Some(format!("z in [{z_lo}, {z_hi}]")),
                ..Default::default()
            },
        ));
        last_rows = rows;
    }
    write_curve(ctx, mb, artifact, "scheme-diff", &["z", "abs_diff"], last_rows)?;
    Ok(reports)
}

/// Conditioned batch against exact finite-t and limit laws, plus the exact
/// branch-time density curve.
fn suite_laws(
    ctx: &Ctx,
    mb: &mut ManifestBuilder,
    artifact: &str,
    cfg: &crate::config::VerifyConfig,
) -> Result<Vec<ComparisonReport>> {
    let field = load_field_input(&cfg.field, "the conditional-law suite", mb)?;
    let batch_path = cfg.batch.as_ref().ok_or_else(|| {
        Error::Configuration(
            "the conditional-law suite requires a batch artifact; run `bbm-cli condition` \
             and reference its manifest here"
                .into(),
        )
    })?;
    let batch = load_batch(&SourceRun::load(batch_path)?.batch_base(mb)?)?;
    let t = cfg.t.ok_or_else(|| {
        Error::Configuration("the conditional-law suite requires the horizon t".into())
    })?;
    let law = cfg.law.as_deref().unwrap_or("low");
    let (limit, alpha) = match law {
        "high" => (
            LimitLawInputs::High,
            cfg.alpha.ok_or_else(|| {
                Error::Configuration("law = \"high\" requires alpha".into())
            })?,
        ),
        "low" => {
            let alpha = cfg.alpha.ok_or_else(|| {
                Error::Configuration("law = \"low\" requires alpha".into())
            })?;
            let phi = phi_alpha(alpha, &field)?;
            (LimitLawInputs::Low { phi: phi.value }, alpha)
        }
        "critical" => (LimitLawInputs::Critical, -GAMMA),
        "moderate" => (
            LimitLawInputs::Moderate {
                a: cfg.a.ok_or_else(|| {
                    Error::Configuration("law = \"moderate\" requires the deviation a".into())
                })?,
            },
            0.0,
        ),
        other => {
            return Err(Error::Configuration(format!(
                "unknown law '{other}' (expected high, low, critical or moderate)"
            )))
        }
    };

    let conditional = conditional_first_branch(&field, batch.threshold, t)?;
    let rows = conditional
        .s_marginal
        .grid()
        .iter()
        .zip(conditional.s_marginal.values())
        .map(|(&s, &f)| vec![s.to_string(), f.to_string()])
        .collect();
    write_curve(ctx, mb, artifact, "branch-time-density", &["s", "density"], rows)?;
    conditional_law_suite(&field, &batch, alpha, t, limit)
}
