//! Time-marching evaluation of the first-branch decomposition
//!
//! ```text
//! u(z,t) = e^{−t} P(B_t ≤ z) + ∫₀^t e^{−s} ds ∫ φ(y;s) u(z−y, t−s)² dy ,
//! ```
//!
//! for the step initial datum. Writing r = t−s, the time integral is
//! ∫₀^t e^{−(t−r)} (G_{t−r} u(·,r)²)(z) dr with G the heat semigroup. Each
//! subinterval carries the exponential weight exactly (product integration),
//! so a constant-1 plateau reproduces 1 to machine precision — which is what
//! makes the >1 overshoot check meaningful. The final subinterval, whose
//! Gaussian has variance → 0, uses a midpoint value extrapolated from earlier
//! slices instead of the unknown current one, keeping the march explicit.

use crate::math::{log_normal_cdf, normal_cdf};
use crate::solver::fd::validate_store_times;
use crate::solver::field::{Scheme, SolutionField};
use crate::solver::grid::{SpaceTimeGrid, WindowPolicy};
use crate::{Error, Result};

/// Sampled Gaussian smoothing kernel with taps out to 8 standard deviations,
/// normalized to unit mass so constants are preserved exactly.
struct Kernel {
    taps: Vec<f64>,
    half: usize,
}

impl Kernel {
    fn new(variance: f64, dz: f64) -> Self {
        let half = (8.0 * variance.sqrt() / dz).ceil() as usize;
        let mut taps: Vec<f64> = (0..=2 * half)
            .map(|j| {
                let x = (j as f64 - half as f64) * dz;
                (-x * x / (2.0 * variance)).exp()
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        for w in &mut taps {
            *w /= sum;
        }
        Self { taps, half }
    }

    /// Convolve, extending `src` by the constant `left`/`right` beyond the
    /// window (the coverage guard keeps real structure away from the edges).
    fn apply(&self, src: &[f64], left: f64, right: f64, out: &mut [f64]) {
        let n = src.len();
        let k = self.half;
        let lo = k.min(n);
        let hi = n.saturating_sub(k);
        for i in 0..lo {
            out[i] = self.edge(src, left, right, i);
        }
        for i in lo..hi {
            let window = &src[i - k..=i + k];
            let mut acc = 0.0;
            for (w, v) in self.taps.iter().zip(window) {
                acc += w * v;
            }
            out[i] = acc;
        }
        for i in hi.max(lo)..n {
            out[i] = self.edge(src, left, right, i);
        }
    }

    fn edge(&self, src: &[f64], left: f64, right: f64, i: usize) -> f64 {
        let n = src.len() as isize;
        let k = self.half as isize;
        let mut acc = 0.0;
        for (j, &w) in self.taps.iter().enumerate() {
            let idx = i as isize + j as isize - k;
            let v = if idx < 0 {
                left
            } else if idx >= n {
                right
            } else {
                src[idx as usize]
            };
            acc += w * v;
        }
        acc
    }
}

/// March the decomposition forward from the step initial datum, storing
/// log-values at the requested times. Supports fixed windows only: the
/// history sum lives on grid nodes, so shifting the window would resample it
/// every step.
pub fn solve_duhamel(grid: &SpaceTimeGrid, store_times: &[f64]) -> Result<SolutionField> {
    if grid.window_policy == WindowPolicy::MovingWithFront {
        return Err(Error::Configuration(
            "integral-equation scheme requires a fixed window (history is node-anchored)".into(),
        ));
    }
    let ts = validate_store_times(grid, store_times)?;
    let ratio = grid.stiffness_ratio();
    if !(0.1..=10.0).contains(&ratio) {
        eprintln!(
            "warning: dz^2/dt = {ratio:.3} outside [0.1, 10]; one error term will dominate"
        );
    }

    let n = grid.n_nodes();
    let dt = grid.dt;
    let nodes: Vec<f64> = (0..n).map(|i| grid.node(i)).collect();
    let k_dt = Kernel::new(dt, grid.dz);
    let k_half = Kernel::new(dt / 2.0, grid.dz);

    // Exact exponential weights for a linear interpolant on one subinterval:
    //   ∫₀^dt e^{−(dt−s)}(1−s/dt) ds = alpha ,   ∫₀^dt e^{−(dt−s)}(s/dt) ds = beta ,
    // and the full-mass weight big_d = alpha + beta. An interior node collects
    // beta from its left subinterval and alpha·e^{dt} from its right one.
    let emdt = (-dt).exp();
    let big_d = 1.0 - emdt;
    let alpha = (1.0 - emdt * (1.0 + dt)) / dt;
    let beta = big_d - alpha;
    let w_int = beta + alpha * dt.exp();

    // First step: u₁ = e^{−dt}·G + alpha·G + beta·u₁² with G = P(B_dt ≤ z);
    // two fixed-point passes from the G-squared seed resolve the implicit
    // right endpoint (beta = O(dt) makes the iteration strongly contracting).
    let g_dt: Vec<f64> = nodes.iter().map(|&z| normal_cdf(z / dt.sqrt())).collect();
    let mut u: Vec<f64> = g_dt.iter().map(|&g| (emdt + alpha + beta) * g).collect();
    for _ in 0..2 {
        for i in 0..n {
            let v = u[i].clamp(0.0, 1.0);
            u[i] = (emdt + alpha) * g_dt[i] + beta * v * v;
        }
    }
    for v in u.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }

    // Running history sum: m[i] = Σ_{j=1}^{n−1} e^{−(tₙ−t_j)} (G_{tₙ−t_j} u_j²)(z_i),
    // advanced one step at a time through the heat-semigroup identity.
    // m_right tracks its plateau value for edge padding.
    let mut m = vec![0.0; n];
    let mut m_right = 0.0;
    let mut u_prev = u.clone();
    let mut u_prevprev: Vec<f64> = Vec::new();

    let mut sq = vec![0.0; n];
    let mut g_prev = vec![0.0; n];
    let mut m_next = vec![0.0; n];
    let mut conv_mid = vec![0.0; n];
    let mut stored_logu: Vec<f64> = Vec::with_capacity(ts.len() * n);
    let mut si = 0usize;
    let n_steps = grid.n_steps();

    let store = |u: &[f64], t: f64, si: &mut usize, out: &mut Vec<f64>| {
        while *si < ts.len() && ts[*si] <= t + 1e-12 {
            let sqrt_t = t.sqrt();
            out.extend(u.iter().zip(&nodes).map(|(&v, &z)| {
                let floor = -t + log_normal_cdf(z / sqrt_t);
                if v > 0.0 {
                    v.ln().min(0.0).max(floor)
                } else {
                    floor
                }
            }));
            *si += 1;
        }
    };
    store(&u, dt, &mut si, &mut stored_logu);

    for step in 2..=n_steps {
        let t = step as f64 * dt;
        for i in 0..n {
            sq[i] = u_prev[i] * u_prev[i];
        }
        k_dt.apply(&sq, 0.0, 1.0, &mut g_prev);
        for v in g_prev.iter_mut() {
            *v *= emdt;
        }
        // reuse sq buffer for m + u_prev² before smoothing it into m_next
        for i in 0..n {
            sq[i] += m[i];
        }
        k_dt.apply(&sq, 0.0, m_right + 1.0, &mut m_next);
        for v in m_next.iter_mut() {
            *v *= emdt;
        }
        let m_next_right = emdt * (m_right + 1.0);

        // midpoint of the final subinterval: linear extrapolation from the
        // two previous slices (plain previous slice on the first occasion)
        if step == 2 {
            conv_mid.copy_from_slice(&u_prev);
        } else {
            for i in 0..n {
                conv_mid[i] = (1.5 * u_prev[i] - 0.5 * u_prevprev[i]).clamp(0.0, 1.0);
            }
        }
        for v in conv_mid.iter_mut() {
            *v = *v * *v;
        }
        let mid = &mut sq; // name the scratch for its current role
        k_half.apply(&conv_mid, 0.0, 1.0, mid);

        let decay_first = (-(t - dt)).exp();
        let decay_full = (-t).exp();
        let sqrt_t = t.sqrt();
        let mut max_u = f64::MIN;
        for i in 0..n {
            let g0 = normal_cdf(nodes[i] / sqrt_t);
            let u1 = decay_full * g0;
            let q = w_int * (m_next[i] - g_prev[i]) + beta * g_prev[i] + alpha * decay_first * g0;
            let v = u1 + q + big_d * mid[i];
            u[i] = v;
            if v > max_u {
                max_u = v;
            }
        }
        if max_u > 1.0 + 1e-10 {
            return Err(Error::Scheme(format!(
                "slice exceeds 1 by {:.3e} at t={t:.4}",
                max_u - 1.0
            )));
        }
        let mut worst = 0.0f64;
        let mut run = 0.0f64;
        for (i, v) in u.iter_mut().enumerate() {
            *v = v.clamp(0.0, 1.0);
            let g0 = normal_cdf(nodes[i] / sqrt_t);
            *v = v.max(decay_full * g0);
            if *v < run {
                worst = worst.max(run - *v);
                *v = run;
            } else {
                run = *v;
            }
        }
        if worst > 1e-12 {
            return Err(Error::Scheme(format!(
                "monotonicity violated by {worst:.3e} at t={t:.4}"
            )));
        }

        std::mem::swap(&mut m, &mut m_next);
        m_right = m_next_right;
        if step == 2 {
            u_prevprev = u_prev.clone();
        } else {
            std::mem::swap(&mut u_prevprev, &mut u_prev);
        }
        std::mem::swap(&mut u_prev, &mut u);
        store(&u_prev, t, &mut si, &mut stored_logu);
    }

    SolutionField::new(
        *grid,
        ts,
        stored_logu,
        vec![0; store_times.len()],
        Scheme::Duhamel,
        true,
    )
}
