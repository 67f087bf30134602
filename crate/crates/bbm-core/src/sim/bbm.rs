//! Exact event-driven simulation of binary branching Brownian motion.
//!
//! Each particle lives an `Exp(1)` lifetime and moves as a standard Brownian
//! motion; positions are sampled only at branch events and at the horizon, so
//! the terminal-time maximum `M_t` carries no discretization bias. Every
//! particle draws from its own seed-derived stream (see [`super::rng`]), which
//! makes a realization a pure function of `(seed, config)` regardless of
//! expansion order.

use super::rng::{derive_seed, RngStream};
use crate::{Error, Result};
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Simulation parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimConfig {
    /// Horizon `t > 0`.
    pub horizon: f64,
    /// Root reproducibility token; all replica and particle seeds derive
    /// from it.
    pub seed: u64,
    /// Maximum number of particles ever created in one realization; the
    /// expected population `e^t` makes `t ≳ 14` infeasible uncapped.
    pub population_cap: usize,
    /// How many of the largest terminal positions each realization records.
    pub record_top_k: usize,
}

impl SimConfig {
    pub const DEFAULT_POPULATION_CAP: usize = 2_000_000;
    pub const DEFAULT_TOP_K: usize = 64;

    /// Config with default cap and top-k.
    pub fn new(horizon: f64, seed: u64) -> Result<Self> {
        let cfg = SimConfig {
            horizon,
            seed,
            population_cap: Self::DEFAULT_POPULATION_CAP,
            record_top_k: Self::DEFAULT_TOP_K,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check the invariants `horizon > 0`, `population_cap ≥ 1`.
    pub fn validate(&self) -> Result<()> {
        if !self.horizon.is_finite() || self.horizon <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "horizon must be finite and positive, got {}",
                self.horizon
            )));
        }
        if self.population_cap == 0 {
            return Err(Error::InvalidInput("population_cap must be >= 1".into()));
        }
        Ok(())
    }
}

/// One realization of the tree, reduced to the observables the theory is
/// stated in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    /// Seed of this realization's tree (all draws derive from it).
    pub seed: u64,
    /// First branching time `τ ∧ t`.
    pub tau: f64,
    /// Root position `X_∅(τ ∧ t)`.
    pub x_at_tau: f64,
    /// Maximum terminal position `M_t`.
    pub m_t: f64,
    /// Particle count at the horizon.
    pub n_t: u64,
    /// The `record_top_k` largest terminal positions, sorted descending
    /// (the finite-`t` extremal observations, unshifted).
    pub top_positions: Vec<f64>,
    /// Whether the root branched before the horizon (`τ < t`).
    pub branched: bool,
}

/// Raw output of one tree walk, before packaging into a [`Realization`].
pub(crate) struct RawTree {
    pub tau: f64,
    pub x_at_tau: f64,
    pub branched: bool,
    pub m_t: f64,
    pub n_t: u64,
    /// Largest terminal positions, descending.
    pub top: Vec<f64>,
    /// Every terminal position in depth-first order (only when requested).
    pub all: Vec<f64>,
}

impl RawTree {
    pub(crate) fn into_realization(self, seed: u64) -> Realization {
        Realization {
            seed,
            tau: self.tau,
            x_at_tau: self.x_at_tau,
            m_t: self.m_t,
            n_t: self.n_t,
            top_positions: self.top,
            branched: self.branched,
        }
    }
}

struct Node {
    seed: u64,
    birth: f64,
    pos: f64,
}

/// Reusable depth-first tree walker. Keeping the stack buffers alive across
/// trials makes rejected conditioned trials allocation-free.
pub(crate) struct TreeRunner {
    stack: Vec<Node>,
    top: Vec<f64>,
}

impl TreeRunner {
    pub(crate) fn new() -> Self {
        TreeRunner {
            stack: Vec::with_capacity(64),
            top: Vec::with_capacity(64),
        }
    }

    /// Walk one tree from `seed`.
    ///
    /// Each node consumes exactly two draws from its own stream (lifetime,
    /// displacement) and derives its children's seeds from its own, so the
    /// realization is independent of traversal order. With `abort_above`
    /// set, the walk returns `Ok(None)` the moment any terminal particle
    /// exceeds the threshold — the acceptance indicator of rejection
    /// conditioning is unaffected because the tree itself does not depend on
    /// the threshold.
    pub(crate) fn run(
        &mut self,
        horizon: f64,
        cap: usize,
        top_k: usize,
        collect_all: bool,
        abort_above: Option<f64>,
        seed: u64,
    ) -> Result<Option<RawTree>> {
        self.stack.clear();
        self.top.clear();
        let mut all = Vec::new();
        let mut created = 1usize;
        let mut n_t = 0u64;
        let mut m_t = f64::NEG_INFINITY;
        // (tau, x_at_tau, branched); the first node popped is the root.
        let mut root: Option<(f64, f64, bool)> = None;
        self.stack.push(Node {
            seed,
            birth: 0.0,
            pos: 0.0,
        });
        while let Some(node) = self.stack.pop() {
            let mut rng = RngStream::from_seed(node.seed);
            let life: f64 = Exp1.sample(&mut rng);
            let gauss: f64 = StandardNormal.sample(&mut rng);
            let branch_time = node.birth + life;
            let is_root = root.is_none();
            if branch_time >= horizon {
                let x = node.pos + (horizon - node.birth).sqrt() * gauss;
                if is_root {
                    root = Some((horizon, x, false));
                }
                n_t += 1;
                if x > m_t {
                    m_t = x;
                }
                if let Some(threshold) = abort_above {
                    if x > threshold {
                        return Ok(None);
                    }
                }
                if top_k > 0 {
                    push_top(&mut self.top, x, top_k);
                }
                if collect_all {
                    all.push(x);
                }
            } else {
                let x = node.pos + life.sqrt() * gauss;
                if is_root {
                    root = Some((branch_time, x, true));
                }
                created += 2;
                if created > cap {
                    return Err(Error::Capped {
                        cap,
                        at_time: branch_time,
                        created,
                    });
                }
                self.stack.push(Node {
                    seed: derive_seed(node.seed, 2),
                    birth: branch_time,
                    pos: x,
                });
                self.stack.push(Node {
                    seed: derive_seed(node.seed, 1),
                    birth: branch_time,
                    pos: x,
                });
            }
        }
        let (tau, x_at_tau, branched) = root.expect("the root is always processed");
        let mut top = self.top.clone();
        top.reverse(); // maintained ascending; reported descending
        Ok(Some(RawTree {
            tau,
            x_at_tau,
            branched,
            m_t,
            n_t,
            top,
            all,
        }))
    }
}

/// Keep `top` as the `k` largest values seen, sorted ascending.
fn push_top(top: &mut Vec<f64>, x: f64, k: usize) {
    if top.len() == k {
        if x <= top[0] {
            return;
        }
        top.remove(0);
    }
    let idx = top.partition_point(|&v| v < x);
    top.insert(idx, x);
}

/// Simulate one realization, drawing its tree seed from `stream`.
///
/// Deterministic: identical `(config, stream state)` give identical output,
/// byte for byte.
pub fn simulate(config: &SimConfig, stream: &mut RngStream) -> Result<Realization> {
    config.validate()?;
    let seed = stream.next_u64();
    let mut runner = TreeRunner::new();
    let raw = runner
        .run(
            config.horizon,
            config.population_cap,
            config.record_top_k,
            false,
            None,
            seed,
        )?
        .expect("unconditioned walks are never rejected");
    Ok(raw.into_realization(seed))
}

/// Simulate `n` independent replicas with per-replica seeds
/// `derive_seed(config.seed, i)`.
///
/// Replicas are embarrassingly parallel; the derived-seed scheme makes the
/// output independent of the thread count.
pub fn simulate_batch(config: &SimConfig, n: u64) -> Result<Vec<Realization>> {
    config.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("batch size must be >= 1".into()));
    }
    let results: Vec<Result<Realization>> = (0..n)
        .into_par_iter()
        .map_init(TreeRunner::new, |runner, i| {
            let seed = derive_seed(config.seed, i);
            let raw = runner
                .run(
                    config.horizon,
                    config.population_cap,
                    config.record_top_k,
                    false,
                    None,
                    seed,
                )?
                .expect("unconditioned walks are never rejected");
            Ok(raw.into_realization(seed))
        })
        .collect();
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seed_and_config_reproduce_byte_for_byte() {
        let config = SimConfig::new(3.0, 2024).unwrap();
        let a = simulate(&config, &mut RngStream::from_seed(5)).unwrap();
        let b = simulate(&config, &mut RngStream::from_seed(5)).unwrap();
        assert_eq!(a, b);
        let batch1 = simulate_batch(&config, 64).unwrap();
        let batch2 = simulate_batch(&config, 64).unwrap();
        assert_eq!(batch1, batch2);
    }

    #[test]
    fn root_lifetime_is_unit_exponential() {
        // The recorded τ∧t must equal the root stream's own Exp(1) draw
        // truncated at the horizon, and the untruncated draws must average 1.
        let config = SimConfig::new(4.0, 77).unwrap();
        let mut stream = RngStream::from_seed(909);
        let n = 100_000;
        let mut sum = 0.0;
        let mut runner = TreeRunner::new();
        for _ in 0..n {
            let seed = stream.next_u64();
            let raw = runner
                .run(config.horizon, config.population_cap, 0, false, None, seed)
                .unwrap()
                .unwrap();
            let mut root_rng = RngStream::from_seed(seed);
            let life: f64 = Exp1.sample(&mut root_rng);
            assert_eq!(raw.tau, life.min(config.horizon));
            assert_eq!(raw.branched, life < config.horizon);
            sum += life;
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 0.012, "mean lifetime {mean}");
    }

    #[test]
    fn unbranched_realizations_satisfy_invariants() {
        let config = SimConfig::new(0.05, 11).unwrap();
        let mut stream = RngStream::from_seed(1);
        let mut saw_unbranched = false;
        for _ in 0..500 {
            let r = simulate(&config, &mut stream).unwrap();
            assert!(r.n_t >= 1);
            if !r.branched {
                saw_unbranched = true;
                assert_eq!(r.n_t, 1);
                assert_eq!(r.m_t, r.x_at_tau);
                assert_eq!(r.tau, config.horizon);
            }
        }
        assert!(saw_unbranched);
    }

    #[test]
    fn top_positions_are_descending_and_headed_by_the_maximum() {
        let mut config = SimConfig::new(3.5, 4242).unwrap();
        config.record_top_k = 8;
        let mut stream = RngStream::from_seed(2);
        for _ in 0..300 {
            let r = simulate(&config, &mut stream).unwrap();
            assert!(!r.top_positions.is_empty());
            assert_eq!(r.top_positions[0], r.m_t);
            assert!(r.top_positions.windows(2).all(|w| w[0] >= w[1]));
            assert!(r.top_positions.len() as u64 <= r.n_t.min(8));
        }
    }

    #[test]
    fn expected_population_at_t2_matches_geometric_mean() {
        // n(2) is geometric with success e^{-2}: mean e^2, variance ≈ 48.1.
        let config = SimConfig::new(2.0, 31).unwrap();
        let n = 100_000;
        let batch = simulate_batch(&config, n).unwrap();
        let mean = batch.iter().map(|r| r.n_t as f64).sum::<f64>() / n as f64;
        let e2 = (2.0f64).exp();
        let sigma_mean = (e2 * e2 - e2).sqrt() / (n as f64).sqrt();
        assert!(
            (mean - e2).abs() < 3.0 * sigma_mean,
            "mean population {mean}, expected {e2} ± {}",
            3.0 * sigma_mean
        );
    }

    #[test]
    fn population_cap_reports_partial_run() {
        let mut config = SimConfig::new(20.0, 5).unwrap();
        config.population_cap = 1000;
        let err = simulate(&config, &mut RngStream::from_seed(3)).unwrap_err();
        match err {
            Error::Capped {
                cap,
                at_time,
                created,
            } => {
                assert_eq!(cap, 1000);
                assert!(created > cap);
                assert!(at_time > 0.0 && at_time < 20.0);
            }
            other => panic!("expected capped error, got {other:?}"),
        }
    }

    #[test]
    fn first_child_line_is_the_first_depth_first_terminal() {
        // Following always-the-first-child seeds reproduces the first entry
        // of the depth-first terminal list: each line of descent is one
        // Brownian path assembled from its particles' own streams.
        let horizon = 3.0;
        let mut runner = TreeRunner::new();
        for seed in 0..200u64 {
            let raw = runner
                .run(horizon, 1 << 20, 0, true, None, seed)
                .unwrap()
                .unwrap();
            let mut s = seed;
            let mut pos = 0.0;
            let mut time = 0.0;
            loop {
                let mut rng = RngStream::from_seed(s);
                let life: f64 = Exp1.sample(&mut rng);
                let gauss: f64 = StandardNormal.sample(&mut rng);
                if time + life >= horizon {
                    pos += (horizon - time).sqrt() * gauss;
                    break;
                }
                pos += life.sqrt() * gauss;
                time += life;
                s = derive_seed(s, 1);
            }
            assert_eq!(pos, raw.all[0]);
        }
    }
}
