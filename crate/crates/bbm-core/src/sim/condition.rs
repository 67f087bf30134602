//! Rejection conditioning on `{M_t ≤ z}` and Monte Carlo probability
//! estimates.
//!
//! Trials are indexed; trial `i` uses the seed `derive_seed(config.seed, i)`,
//! so a batch is a pure function of `(config, threshold)` no matter how the
//! trial range is sharded across threads. A trial's tree does not depend on
//! the threshold, so on a fixed seed the per-trial acceptance indicator is
//! monotone in the threshold (exact coupling).

use super::bbm::{Realization, SimConfig, TreeRunner};
use super::rng::derive_seed;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// 97.5% standard-normal quantile (Wilson 95% interval).
const Z_95: f64 = 1.959_963_984_540_054;

/// Trials per work chunk; one chunk is the unit of parallel scheduling.
const CHUNK: u64 = 8_192;

/// Result of a rejection-conditioned batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionedBatch {
    /// Accepted realizations in trial order; every one has `m_t ≤ threshold`.
    pub accepted: Vec<Realization>,
    /// Total trials attempted.
    pub trials: u64,
    /// Conditioning level `z`.
    pub threshold: f64,
    /// `accepted.len() / trials` — an unbiased estimate of `u(threshold, t)`.
    pub acceptance_rate: f64,
}

impl ConditionedBatch {
    /// True when not a single trial was accepted (flagged, never an error).
    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }
}

/// Condition on `{M_t ≤ threshold}` by plain rejection.
///
/// Stops at `max_trials`, or earlier once `target_accepted` realizations
/// have been collected. The stopping rule is defined on the trial index
/// sequence (the batch equals what a sequential scan would produce), and
/// trials run in parallel chunks with per-trial derived seeds.
pub fn simulate_conditioned(
    config: &SimConfig,
    threshold: f64,
    max_trials: u64,
    target_accepted: Option<u64>,
) -> Result<ConditionedBatch> {
    config.validate()?;
    if !threshold.is_finite() {
        return Err(Error::InvalidInput(format!(
            "conditioning threshold must be finite, got {threshold}"
        )));
    }
    if max_trials == 0 {
        return Err(Error::InvalidInput("max_trials must be >= 1".into()));
    }
    if target_accepted == Some(0) {
        return Err(Error::InvalidInput(
            "target_accepted, when set, must be >= 1".into(),
        ));
    }
    let target = target_accepted.unwrap_or(u64::MAX);
    let threads = rayon::current_num_threads().max(1) as u64;
    let wave_len = (CHUNK * threads * 8).min(max_trials);

    let mut accepted: Vec<(u64, Realization)> = Vec::new();
    let mut trials = 0u64;
    let mut start = 0u64;
    while start < max_trials {
        let end = (start + wave_len).min(max_trials);
        let n_chunks = (end - start).div_ceil(CHUNK);
        let wave: Vec<Result<Vec<(u64, Realization)>>> = (0..n_chunks)
            .into_par_iter()
            .map_init(TreeRunner::new, |runner, c| {
                let lo = start + c * CHUNK;
                let hi = (lo + CHUNK).min(end);
                let mut acc = Vec::new();
                for i in lo..hi {
                    let seed = derive_seed(config.seed, i);
                    if let Some(raw) = runner.run(
                        config.horizon,
                        config.population_cap,
                        config.record_top_k,
                        false,
                        Some(threshold),
                        seed,
                    )? {
                        acc.push((i, raw.into_realization(seed)));
                    }
                }
                Ok(acc)
            })
            .collect();
        for chunk in wave {
            accepted.extend(chunk?);
        }
        trials = end;
        if (accepted.len() as u64) >= target {
            break;
        }
        start = end;
    }
    // Re-apply the sequential stopping rule: cut at the trial index of the
    // target'th acceptance so parallel overshoot does not leak into the batch.
    if (accepted.len() as u64) > target {
        accepted.truncate(target as usize);
        trials = accepted.last().expect("target >= 1").0 + 1;
    }
    let acceptance_rate = accepted.len() as f64 / trials as f64;
    Ok(ConditionedBatch {
        accepted: accepted.into_iter().map(|(_, r)| r).collect(),
        trials,
        threshold,
        acceptance_rate,
    })
}

/// Monte Carlo estimate of `P(M_t ≤ threshold)` with its Wilson 95% interval.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub successes: u64,
    pub trials: u64,
}

/// Estimate `P(M_t ≤ threshold)` over `n ≥ 100` trials.
///
/// Deterministic given `config.seed`; `±∞` thresholds are allowed (they give
/// the trivial estimates). Uses the same per-trial seeds as
/// [`simulate_conditioned`], so the point estimate equals that batch's
/// acceptance rate on identical inputs.
pub fn estimate_probability(
    config: &SimConfig,
    threshold: f64,
    n: u64,
) -> Result<ProbabilityEstimate> {
    config.validate()?;
    if threshold.is_nan() {
        return Err(Error::InvalidInput("threshold must not be NaN".into()));
    }
    if n < 100 {
        return Err(Error::InvalidInput(format!(
            "probability estimation needs n >= 100 trials, got {n}"
        )));
    }
    let n_chunks = n.div_ceil(CHUNK);
    let counts: Vec<Result<u64>> = (0..n_chunks)
        .into_par_iter()
        .map_init(TreeRunner::new, |runner, c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut successes = 0u64;
            for i in lo..hi {
                let seed = derive_seed(config.seed, i);
                if runner
                    .run(
                        config.horizon,
                        config.population_cap,
                        0,
                        false,
                        Some(threshold),
                        seed,
                    )?
                    .is_some()
                {
                    successes += 1;
                }
            }
            Ok(successes)
        })
        .collect();
    let mut successes = 0u64;
    for c in counts {
        successes += c?;
    }
    let (lower, upper) = wilson_interval(successes, n);
    Ok(ProbabilityEstimate {
        estimate: successes as f64 / n as f64,
        lower,
        upper,
        successes,
        trials: n,
    })
}

/// Wilson score interval at 95% for `successes / trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0, "wilson interval needs at least one trial");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // At the boundary counts the analytic endpoints are exact; avoid
    // sub-ulp residue from the cancellation in center − half.
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(t: f64, seed: u64) -> SimConfig {
        SimConfig::new(t, seed).unwrap()
    }

    #[test]
    fn acceptance_rate_is_monotone_in_threshold_on_shared_seeds() {
        let cfg = config(2.0, 140);
        let mut last = -1.0;
        for threshold in [-0.5, 0.0, 0.5, 1.5, 4.0] {
            let batch = simulate_conditioned(&cfg, threshold, 20_000, None).unwrap();
            assert!(
                batch.acceptance_rate >= last,
                "rate decreased at threshold {threshold}"
            );
            assert!(batch.accepted.iter().all(|r| r.m_t <= threshold));
            last = batch.acceptance_rate;
        }
    }

    #[test]
    fn estimate_matches_conditioned_acceptance_rate() {
        let cfg = config(2.0, 88);
        let est = estimate_probability(&cfg, 0.0, 10_000).unwrap();
        let batch = simulate_conditioned(&cfg, 0.0, 10_000, None).unwrap();
        assert_eq!(est.estimate, batch.acceptance_rate);
        assert_eq!(est.successes, batch.accepted.len() as u64);
        assert!(est.lower <= est.estimate && est.estimate <= est.upper);
    }

    #[test]
    fn target_accepted_applies_the_sequential_stopping_rule() {
        let cfg = config(2.0, 7);
        let capped = simulate_conditioned(&cfg, 0.0, 100_000, Some(50)).unwrap();
        assert_eq!(capped.accepted.len(), 50);
        // The same batch truncated by hand from a run without a target.
        let full = simulate_conditioned(&cfg, 0.0, capped.trials, None).unwrap();
        assert_eq!(full.accepted, capped.accepted);
        assert_eq!(full.trials, capped.trials);
        // The cut is exact: the last trial is the 50th acceptance.
        assert_eq!(
            full.accepted.last().unwrap().seed,
            derive_seed(cfg.seed, capped.trials - 1)
        );
    }

    #[test]
    fn zero_acceptances_flagged_not_an_error() {
        let cfg = config(1.0, 9);
        let batch = simulate_conditioned(&cfg, -50.0, 2_000, None).unwrap();
        assert!(batch.is_empty());
        assert_eq!(batch.acceptance_rate, 0.0);
        assert_eq!(batch.trials, 2_000);
    }

    #[test]
    fn infinite_threshold_estimates_one() {
        let cfg = config(1.5, 13);
        let est = estimate_probability(&cfg, f64::INFINITY, 1_000).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert!(est.lower > 0.99);
        let none = estimate_probability(&cfg, f64::NEG_INFINITY, 1_000).unwrap();
        assert_eq!(none.estimate, 0.0);
        assert!(none.upper < 0.01);
    }

    #[test]
    fn interval_width_shrinks_like_root_n() {
        let cfg = config(2.0, 55);
        let w1 = {
            let e = estimate_probability(&cfg, 1.0, 20_000).unwrap();
            e.upper - e.lower
        };
        let cfg2 = config(2.0, 56);
        let w2 = {
            let e = estimate_probability(&cfg2, 1.0, 40_000).unwrap();
            e.upper - e.lower
        };
        let shrink = w2 / w1;
        let expected = 1.0 / (2.0f64).sqrt();
        assert!(
            (shrink / expected - 1.0).abs() < 0.2,
            "width ratio {shrink}, expected ≈ {expected}"
        );
    }

    #[test]
    fn wilson_interval_edge_cases() {
        let (lo, hi) = wilson_interval(0, 1_000);
        assert_eq!(lo, 0.0);
        assert!(hi < 0.01);
        let (lo, hi) = wilson_interval(1_000, 1_000);
        assert!(lo > 0.99);
        assert_eq!(hi, 1.0);
    }
}
