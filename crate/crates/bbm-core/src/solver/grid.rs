//! Space-time grid description shared by both schemes.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// How the spatial window behaves as time advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowPolicy {
    /// The window `[z_min, z_max]` is static; it must be wide enough to hold
    /// both the diffusive spread and the linear front range of the horizon.
    Fixed,
    /// The window translates rightward at speed `√2` (in whole-node
    /// increments), tracking the front. Values entering from the right are
    /// set to 1, values leaving on the left are dropped (the left edge is
    /// deep in the `u ≈ 0` tail).
    MovingWithFront,
}

/// Uniform space-time grid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub z_min: f64,
    pub z_max: f64,
    pub dz: f64,
    pub dt: f64,
    pub t_max: f64,
    pub window_policy: WindowPolicy,
}

impl SpaceTimeGrid {
    /// Validate and build a grid.
    ///
    /// For `Fixed` windows the width must cover the horizon:
    /// `z_max − z_min ≥ 10√t_max + 2√2·t_max`.
    pub fn new(
        z_min: f64,
        z_max: f64,
        dz: f64,
        dt: f64,
        t_max: f64,
        window_policy: WindowPolicy,
    ) -> Result<Self> {
        for (name, v) in [
            ("z_min", z_min),
            ("z_max", z_max),
            ("dz", dz),
            ("dt", dt),
            ("t_max", t_max),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be finite, got {v}")));
            }
        }
        if !(dz > 0.0 && dt > 0.0) {
            return Err(Error::InvalidInput("dz and dt must be positive".into()));
        }
        if !(z_max > z_min) {
            return Err(Error::InvalidInput("z_max must exceed z_min".into()));
        }
        if !(t_max > 0.0) {
            return Err(Error::InvalidInput("t_max must be positive".into()));
        }
        let width = z_max - z_min;
        if window_policy == WindowPolicy::Fixed {
            let needed = 10.0 * t_max.sqrt() + 2.0 * std::f64::consts::SQRT_2 * t_max;
            if width < needed {
                return Err(Error::Coverage(format!(
                    "fixed window width {width:.2} < required {needed:.2} for t_max={t_max}"
                )));
            }
        }
        let n = width / dz;
        if n > 5e7 {
            return Err(Error::InvalidInput(format!("node count {n:.0} too large")));
        }
        let steps = t_max / dt;
        if (steps - steps.round()).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "t_max={t_max} must be an integer multiple of dt={dt}"
            )));
        }
        Ok(Self {
            z_min,
            z_max,
            dz,
            dt,
            t_max,
            window_policy,
        })
    }

    /// Number of spatial nodes (inclusive of both boundaries).
    pub fn n_nodes(&self) -> usize {
        ((self.z_max - self.z_min) / self.dz).round() as usize + 1
    }

    /// Number of time steps to the horizon.
    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    /// Position of node `i` in the initial window.
    pub fn node(&self, i: usize) -> f64 {
        self.z_min + self.dz * i as f64
    }

    /// All node positions in the initial window.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.node(i)).collect()
    }

    /// Accuracy guard ratio `dz²/dt`; the schemes warn outside `[0.1, 10]`.
    pub fn stiffness_ratio(&self) -> f64 {
        self.dz * self.dz / self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_window_width_guard() {
        // t_max=5 needs width >= 10*sqrt(5)+2*sqrt(2)*5 = 36.50...
        assert!(SpaceTimeGrid::new(-18.0, 18.0, 0.01, 0.005, 5.0, WindowPolicy::Fixed).is_err());
        assert!(SpaceTimeGrid::new(-20.0, 20.0, 0.01, 0.005, 5.0, WindowPolicy::Fixed).is_ok());
        // moving windows skip the width requirement
        assert!(
            SpaceTimeGrid::new(-30.0, 30.0, 0.02, 0.01, 60.0, WindowPolicy::MovingWithFront)
                .is_ok()
        );
    }

    #[test]
    fn node_count_and_steps() {
        let g = SpaceTimeGrid::new(-20.0, 20.0, 0.01, 0.005, 5.0, WindowPolicy::Fixed).unwrap();
        assert_eq!(g.n_nodes(), 4001);
        assert_eq!(g.n_steps(), 1000);
        assert!((g.node(g.n_nodes() - 1) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn non_multiple_horizon_rejected() {
        assert!(SpaceTimeGrid::new(-40.0, 40.0, 0.01, 0.3, 10.0, WindowPolicy::Fixed).is_err());
    }
}
