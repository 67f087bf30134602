//! `solve` — march the F-KPP equation and persist the solution field.
//! `wave` — extract the travelling-wave profile and its integral constants
//! from a solved field.

use super::{disp, Ctx, Outcome};
use crate::manifest::{write_csv_table, ManifestBuilder, SourceRun, WaveSummary};
use bbm_core::io::{load_field, save_field, write_json};
use bbm_core::math::{c1_from_wave, c1_in_centering_frame, c2_from_c1};
use bbm_core::solver::{
    extract_wave, solve_duhamel, solve_fd, wave_ode_residual, Initial, SolutionField,
    SpaceTimeGrid, WindowPolicy,
};
use bbm_core::{Error, Result};

pub(crate) fn parse_window(name: &str) -> Result<WindowPolicy> {
    match name {
        "fixed" => Ok(WindowPolicy::Fixed),
        "moving-with-front" => Ok(WindowPolicy::MovingWithFront),
        other => Err(Error::Configuration(format!(
            "unknown window policy '{other}' (expected 'fixed' or 'moving-with-front')"
        ))),
    }
}

/// Slice times from the config: an explicit list, or a uniform cadence
/// `store_every` swept up to the horizon (always including the horizon).
fn resolve_store_times(
    explicit: &Option<Vec<f64>>,
    every: &Option<f64>,
    t_max: f64,
) -> Result<Vec<f64>> {
    match (explicit, every) {
        (Some(_), Some(_)) => Err(Error::Configuration(
            "store_times and store_every are mutually exclusive".into(),
        )),
        (Some(times), None) => Ok(times.clone()),
        (None, Some(step)) => {
            if !(step.is_finite() && *step > 0.0) {
                return Err(Error::Configuration(format!(
                    "store_every must be positive, got {step}"
                )));
            }
            // The epsilon absorbs division roundoff (t_max an exact multiple
            // of step must not lose its last slice); any overshoot clamps to
            // the horizon, which the solver requires as an upper bound.
            let n = (t_max / step + 1e-9).floor() as usize;
            let mut times: Vec<f64> = Vec::with_capacity(n + 1);
            for k in 1..=n {
                times.push((k as f64 * step).min(t_max));
            }
            if times.last().map_or(true, |&last| last < t_max * (1.0 - 1e-12)) {
                times.push(t_max);
            }
            times.dedup();
            Ok(times)
        }
        (None, None) => Ok(vec![t_max]),
    }
}

pub fn run_solve(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config.solve.as_ref().expect("dispatcher checked section");
    let scheme = cfg.scheme.as_str();
    if scheme != "fd" && scheme != "duhamel" {
        return Err(Error::Configuration(format!(
            "unknown scheme '{scheme}' (expected 'fd' or 'duhamel')"
        )));
    }
    let window = parse_window(&cfg.window)?;
    let grid = SpaceTimeGrid::new(cfg.z_min, cfg.z_max, cfg.dz, cfg.dt, cfg.t_max, window)?;
    let store = resolve_store_times(&cfg.store_times, &cfg.store_every, cfg.t_max)?;

    let field = match scheme {
        "fd" => solve_fd(&grid, Initial::Heaviside, &store)?,
        _ => solve_duhamel(&grid, &store)?,
    };

    // Probe before writing: a bad probe aborts with no partial artifacts.
    let t_probe = *field.times().last().expect("solver stores >= 1 slice");
    let mut probe_rows = Vec::with_capacity(cfg.probes.len());
    for &z in &cfg.probes {
        let (u, log_u) = field.evaluate(z, t_probe)?;
        probe_rows.push((z, u, log_u));
    }

    let mut mb = ManifestBuilder::new("solve");
    mb.steps(grid.n_steps() as u64);
    let base = ctx.out.file(&cfg.artifact)?;
    let (meta_path, payload_path) = save_field(&field, &base)?;
    mb.output("field-meta", &meta_path)?;
    mb.output("field-payload", &payload_path)?;

    let probes_path = ctx.out.file(&format!("{}-probes.csv", cfg.artifact))?;
    write_csv_table(
        &probes_path,
        &["z", "t", "u", "log_u"],
        probe_rows.iter().map(|&(z, u, lu)| {
            vec![z.to_string(), t_probe.to_string(), u.to_string(), lu.to_string()]
        }),
    )?;
    mb.output("probe-table", &probes_path)?;
    let manifest_path = mb.write(&ctx.out, &ctx.flags, &ctx.config_text)?;

    println!(
        "solved scheme={scheme} window=[{}, {}] dz={} dt={} t_max={} ({} slices stored)",
        cfg.z_min,
        cfg.z_max,
        cfg.dz,
        cfg.dt,
        cfg.t_max,
        field.times().len()
    );
    for &(z, u, lu) in &probe_rows {
        println!("  u({z}, {t_probe}) = {}   log u = {}", disp(u), disp(lu));
    }
    println!("manifest: {}", manifest_path.display());
    Ok(Outcome::Pass)
}

/// Build the wave-summary document from a solved field.
pub(crate) fn wave_summary_from_field(
    field: &SolutionField,
    t_source: f64,
    residual_window: [f64; 2],
) -> Result<(WaveSummary, Vec<(f64, f64)>)> {
    let profile = extract_wave(field, t_source)?;
    let c1_est = c1_from_wave(&profile)?;
    let c1 = c1_in_centering_frame(c1_est.value, profile.median_offset());
    let c2 = c2_from_c1(c1)?;
    let residual = wave_ode_residual(&profile, residual_window[0], residual_window[1])?;
    let rows: Vec<(f64, f64)> = profile
        .z()
        .iter()
        .copied()
        .zip(profile.w().iter().copied())
        .collect();
    Ok((
        WaveSummary {
            t_source,
            median_offset: profile.median_offset(),
            left_slope: profile.left_slope(),
            c1_profile_frame: c1_est.value,
            c1_tail_fraction: c1_est.tail_fraction,
            c1,
            c2,
            residual_linf: residual,
            residual_window,
            n_nodes: rows.len(),
        },
        rows,
    ))
}

pub fn run_wave(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config.wave.as_ref().expect("dispatcher checked section");
    let mut mb = ManifestBuilder::new("wave");
    let source = SourceRun::load(&cfg.field)?;
    let field = load_field(&source.field_base(&mut mb)?)?;

    let window = cfg.residual_window.unwrap_or([-5.0, 5.0]);
    let (summary, rows) = wave_summary_from_field(&field, cfg.t_source, window)?;
    mb.steps(rows.len() as u64);

    let profile_path = ctx.out.file(&format!("{}.csv", cfg.artifact))?;
    write_csv_table(
        &profile_path,
        &["z", "w"],
        rows.iter()
            .map(|&(z, w)| vec![z.to_string(), w.to_string()]),
    )?;
    mb.output("wave-profile", &profile_path)?;

    let summary_path = ctx.out.file(&format!("{}.json", cfg.artifact))?;
    write_json(&summary_path, &summary)?;
    mb.output("wave-summary", &summary_path)?;
    let manifest_path = mb.write(&ctx.out, &ctx.flags, &ctx.config_text)?;

    println!(
        "wave extracted at t = {} ({} nodes):",
        summary.t_source, summary.n_nodes
    );
    println!(
        "  c1 = {}   (profile frame {}, tail share {})",
        disp(summary.c1),
        disp(summary.c1_profile_frame),
        disp(summary.c1_tail_fraction)
    );
    println!("  c2 = {}", disp(summary.c2));
    println!(
        "  left tail slope of log w = {}   ODE residual Linf[{}, {}] = {}",
        disp(summary.left_slope),
        window[0],
        window[1],
        disp(summary.residual_linf)
    );
    println!("manifest: {}", manifest_path.display());
    Ok(Outcome::Pass)
}

/// Shared input-loading for suites that need a field artifact.
pub(crate) fn load_field_input(
    path: &Option<String>,
    role_hint: &str,
    mb: &mut ManifestBuilder,
) -> Result<SolutionField> {
    let path = path.as_ref().ok_or_else(|| {
        Error::Configuration(format!(
            "{role_hint} requires a field artifact; run `bbm-cli solve` and reference its \
             manifest here"
        ))
    })?;
    let source = SourceRun::load(path)?;
    load_field(&source.field_base(mb)?)
}

/// Shared input-loading for commands that need wave constants.
pub(crate) fn load_wave_input(
    path: &Option<String>,
    role_hint: &str,
    mb: &mut ManifestBuilder,
) -> Result<WaveSummary> {
    let path = path.as_ref().ok_or_else(|| {
        Error::Configuration(format!(
            "{role_hint} requires a travelling-wave artifact; run `bbm-cli wave` and \
             reference its manifest here"
        ))
    })?;
    SourceRun::load(path)?.wave_summary(mb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn store_cadence_includes_horizon() {
        let times = resolve_store_times(&None, &Some(0.4), 1.0).unwrap();
        assert_eq!(times, vec![0.4, 0.8, 1.0]);
        let exact = resolve_store_times(&None, &Some(0.25), 1.0).unwrap();
        assert_eq!(exact, vec![0.25, 0.5, 0.75, 1.0]);
        assert!(resolve_store_times(&Some(vec![1.0]), &Some(0.1), 1.0).is_err());
        assert_eq!(resolve_store_times(&None, &None, 2.0).unwrap(), vec![2.0]);
    }

    #[test]
    fn window_names_are_strict() {
        assert!(parse_window("fixed").is_ok());
        assert!(parse_window("moving-with-front").is_ok());
        assert!(parse_window("moving").is_err());
    }
}
