//! `simulate` — run unconditioned branching Brownian motion replicas.
//! `condition` — rejection-condition replicas on `{M_t ≤ threshold}`.
//!
//! Both require an explicit seed; a capped run still writes what it knows
//! (and its manifest) before surfacing the partial-result exit code.

use super::{disp, Ctx, Outcome};
use crate::manifest::{write_csv_table, ManifestBuilder};
use bbm_core::io::{save_batch, write_json, BatchSummary};
use bbm_core::math::SQRT_2;
use bbm_core::sim::{simulate_batch, simulate_conditioned, Realization, SimConfig};
use bbm_core::{Error, Result};
use serde::Serialize;

/// Scalar summary of an unconditioned replica batch.
#[derive(Debug, Clone, Serialize)]
struct SimulateSummary {
    horizon: f64,
    seed: u64,
    n: u64,
    population_cap: usize,
    record_top_k: usize,
    threads: usize,
    mean_tau: f64,
    mean_m_t: f64,
    /// Mean particle count at the horizon with its standard error (the
    /// population is geometric with mean `e^t`).
    mean_n_t: f64,
    se_n_t: f64,
    min_m_t: f64,
    max_m_t: f64,
    branched_fraction: f64,
}

/// Details of a run that hit its population cap: the partial statistics the
/// simulator attached to the error.
#[derive(Debug, Clone, Serialize)]
struct CappedReport {
    horizon: f64,
    seed: u64,
    population_cap: usize,
    at_time: f64,
    particles_created: usize,
}

fn sim_config(
    horizon: f64,
    seed: Option<u64>,
    section: &str,
    population_cap: Option<usize>,
    record_top_k: Option<usize>,
) -> Result<SimConfig> {
    let seed = seed.ok_or_else(|| {
        Error::Configuration(format!(
            "[{section}] requires an explicit seed (set `seed = <u64>` or pass --seed); \
             randomness never defaults"
        ))
    })?;
    let config = SimConfig {
        horizon,
        seed,
        population_cap: population_cap.unwrap_or(SimConfig::DEFAULT_POPULATION_CAP),
        record_top_k: record_top_k.unwrap_or(SimConfig::DEFAULT_TOP_K),
    };
    config.validate()?;
    Ok(config)
}

/// On a capped run: persist the partial statistics plus a manifest, then
/// hand the error back so the process exits with the partial-result code.
fn capped_exit(ctx: &Ctx, command: &str, config: &SimConfig, err: Error) -> Result<Outcome> {
    if let Error::Capped {
        cap,
        at_time,
        created,
    } = &err
    {
        let report = CappedReport {
            horizon: config.horizon,
            seed: config.seed,
            population_cap: *cap,
            at_time: *at_time,
            particles_created: *created,
        };
        let mut mb = ManifestBuilder::new(command);
        mb.seed(config.seed);
        let path = ctx.out.file("capped.json")?;
        write_json(&path, &report)?;
        mb.output("capped-report", &path)?;
        mb.write(&ctx.out, &ctx.flags, &ctx.config_text)?;
        eprintln!(
            "population cap {cap} exceeded at t = {at_time:.4} ({created} particles); \
             partial report written to {}",
            path.display()
        );
    }
    Err(err)
}

fn realization_rows(samples: &[Realization]) -> impl Iterator<Item = Vec<String>> + '_ {
    samples.iter().map(|r| {
        vec![
            r.seed.to_string(),
            r.tau.to_string(),
            r.x_at_tau.to_string(),
            r.m_t.to_string(),
            r.n_t.to_string(),
            r.branched.to_string(),
            r.top_positions
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(";"),
        ]
    })
}

const REALIZATION_HEADER: [&str; 7] = [
    "seed",
    "tau",
    "x_at_tau",
    "m_t",
    "n_t",
    "branched",
    "top_positions",
];

pub fn run_simulate(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config.sim.as_ref().expect("dispatcher checked section");
    if cfg.n == 0 {
        return Err(Error::Configuration("n must be >= 1".into()));
    }
    let config = sim_config(
        cfg.horizon,
        cfg.seed,
        "sim",
        cfg.population_cap,
        cfg.record_top_k,
    )?;
    let samples = match simulate_batch(&config, cfg.n) {
        Ok(samples) => samples,
        Err(err) => return capped_exit(ctx, "simulate", &config, err),
    };

    let n = samples.len() as f64;
    let mean = |f: &dyn Fn(&Realization) -> f64| samples.iter().map(|r| f(r)).sum::<f64>() / n;
    let mean_n_t = mean(&|r| r.n_t as f64);
    let var_n_t =
        samples.iter().map(|r| (r.n_t as f64 - mean_n_t).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let summary = SimulateSummary {
        horizon: cfg.horizon,
        seed: config.seed,
        n: cfg.n,
        population_cap: config.population_cap,
        record_top_k: config.record_top_k,
        threads: rayon::current_num_threads(),
        mean_tau: mean(&|r| r.tau),
        mean_m_t: mean(&|r| r.m_t),
        mean_n_t,
        se_n_t: (var_n_t / n).sqrt(),
        min_m_t: samples.iter().map(|r| r.m_t).fold(f64::INFINITY, f64::min),
        max_m_t: samples
            .iter()
            .map(|r| r.m_t)
            .fold(f64::NEG_INFINITY, f64::max),
        branched_fraction: mean(&|r| if r.branched { 1.0 } else { 0.0 }),
    };

    let mut mb = ManifestBuilder::new("simulate");
    mb.seed(config.seed);
    mb.steps(cfg.n);
    let csv_path = ctx.out.file(&format!("{}.csv", cfg.artifact))?;
    write_csv_table(&csv_path, &REALIZATION_HEADER, realization_rows(&samples))?;
    mb.output("batch-samples", &csv_path)?;
    let json_path = ctx.out.file(&format!("{}.json", cfg.artifact))?;
    write_json(&json_path, &summary)?;
    mb.output("batch-summary", &json_path)?;
    let manifest_path = mb.write(&ctx.out, &ctx.flags, &ctx.config_text)?;

    println!(
        "simulated {} replicas at t = {} (seed {}, {} threads)",
        cfg.n, cfg.horizon, config.seed, summary.threads
    );
    println!(
        "  mean tau = {}   mean M_t = {}   mean n_t = {} (se {})",
        disp(summary.mean_tau),
        disp(summary.mean_m_t),
        disp(summary.mean_n_t),
        disp(summary.se_n_t)
    );
    println!("manifest: {}", manifest_path.display());
    Ok(Outcome::Pass)
}

pub fn run_condition(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx
        .config
        .condition
        .as_ref()
        .expect("dispatcher checked section");
    let threshold = match (cfg.threshold, cfg.alpha) {
        (Some(z), None) => z,
        (None, Some(alpha)) => SQRT_2 * alpha * cfg.horizon,
        (Some(_), Some(_)) => {
            return Err(Error::Configuration(
                "threshold and alpha are mutually exclusive".into(),
            ))
        }
        (None, None) => {
            return Err(Error::Configuration(
                "conditioning requires threshold (a level z) or alpha (the line √2α·horizon)"
                    .into(),
            ))
        }
    };
    let config = sim_config(
        cfg.horizon,
        cfg.seed,
        "condition",
        cfg.population_cap,
        cfg.record_top_k,
    )?;
    let batch = match simulate_conditioned(&config, threshold, cfg.max_trials, cfg.target_accepted)
    {
        Ok(batch) => batch,
        Err(err) => return capped_exit(ctx, "condition", &config, err),
    };

    let mut mb = ManifestBuilder::new("condition");
    mb.seed(config.seed);
    mb.steps(batch.trials);
    let base = ctx.out.file(&cfg.artifact)?;
    let (csv_path, json_path) = save_batch(&batch, &base)?;
    mb.output("batch-samples", &csv_path)?;
    mb.output("batch-summary", &json_path)?;
    let manifest_path = mb.write(&ctx.out, &ctx.flags, &ctx.config_text)?;

    let summary = BatchSummary::from_batch(&batch);
    println!(
        "conditioned on M_{} <= {}: accepted {} of {} trials",
        cfg.horizon,
        disp(threshold),
        summary.accepted,
        summary.trials
    );
    println!(
        "  acceptance = {}   (95% Wilson [{}, {}])",
        disp(summary.acceptance_rate),
        disp(summary.wilson_lower),
        disp(summary.wilson_upper)
    );
    if batch.is_empty() {
        println!("  note: zero acceptances — empty batch flagged, artifacts still written");
    }
    println!("manifest: {}", manifest_path.display());
    Ok(Outcome::Pass)
}
