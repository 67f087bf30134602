//! Stored solution slices with log-domain values and window bookkeeping.

use crate::solver::grid::SpaceTimeGrid;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which integrator produced a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Operator-split finite differences (Crank–Nicolson diffusion, exact
    /// logistic reaction half-steps).
    Fd,
    /// Integral-equation time stepping on the heat semigroup (spectrally
    /// accurate in space).
    Duhamel,
}

/// Solution of the front equation stored on selected time slices.
///
/// Values are kept as `log u` so the deep left tail (down to `u ~ 1e-300`
/// and analytically floored below that) stays resolved. Each slice records
/// the window offset, i.e. how many whole nodes the window start has moved
/// right of the initial `z_min`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionField {
    grid: SpaceTimeGrid,
    times: Vec<f64>,
    /// Row-major `times.len() × grid.n_nodes()` log-values.
    logu: Vec<f64>,
    /// Window start offset (in nodes) for each stored slice.
    window_offsets: Vec<i64>,
    scheme: Scheme,
    /// True when the initial datum was CDF-type (nondecreasing), so every
    /// slice is a distribution function in `z`.
    cdf_type: bool,
}

impl SolutionField {
    pub(crate) fn new(
        grid: SpaceTimeGrid,
        times: Vec<f64>,
        logu: Vec<f64>,
        window_offsets: Vec<i64>,
        scheme: Scheme,
        cdf_type: bool,
    ) -> Result<Self> {
        let n = grid.n_nodes();
        if times.is_empty() {
            return Err(Error::Coverage("no time slices stored".into()));
        }
        if logu.len() != times.len() * n || window_offsets.len() != times.len() {
            return Err(Error::InvalidInput("slice storage shape mismatch".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("store times must be increasing".into()));
        }
        if logu.iter().any(|&v| !(v <= 1e-12) || v.is_nan()) {
            return Err(Error::InvalidInput("log-values must satisfy log u <= 0".into()));
        }
        Ok(Self {
            grid,
            times,
            logu,
            window_offsets,
            scheme,
            cdf_type,
        })
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn is_cdf_type(&self) -> bool {
        self.cdf_type
    }

    /// Stored slice times, increasing.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Index of the stored slice at time `t` (within `1e-9`).
    pub fn slice_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9)
            .ok_or_else(|| Error::Coverage(format!("no stored slice at t={t}")))
    }

    /// Log-values of stored slice `i`.
    pub fn slice_logu(&self, i: usize) -> &[f64] {
        let n = self.grid.n_nodes();
        &self.logu[i * n..(i + 1) * n]
    }

    /// Node positions of stored slice `i` (accounting for window motion).
    pub fn slice_nodes(&self, i: usize) -> Vec<f64> {
        let shift = self.window_offsets[i] as f64 * self.grid.dz;
        (0..self.grid.n_nodes())
            .map(|j| self.grid.node(j) + shift)
            .collect()
    }

    /// Linear values of stored slice `i`.
    pub fn slice_u(&self, i: usize) -> Vec<f64> {
        self.slice_logu(i).iter().map(|&l| l.exp()).collect()
    }

    fn window_bounds(&self, i: usize) -> (f64, f64) {
        let shift = self.window_offsets[i] as f64 * self.grid.dz;
        (self.grid.z_min + shift, self.grid.z_max + shift)
    }

    /// Interpolate `log u` at position `z` within stored slice `i`.
    ///
    /// Right of the window the solution is 1 to machine precision (returns
    /// `0.0`); left of the window is a coverage error.
    fn interp_logu(&self, i: usize, z: f64) -> Result<f64> {
        let (lo, hi) = self.window_bounds(i);
        if z > hi {
            return Ok(0.0);
        }
        if z < lo {
            return Err(Error::Coverage(format!(
                "z={z} left of window [{lo:.3}, {hi:.3}] at t={}",
                self.times[i]
            )));
        }
        let x = (z - lo) / self.grid.dz;
        let j = (x.floor() as usize).min(self.grid.n_nodes() - 2);
        let frac = x - j as f64;
        let row = self.slice_logu(i);
        Ok(row[j] + frac * (row[j + 1] - row[j]))
    }

    /// Evaluate `(u, log u)` at `(z, t)` by bilinear interpolation in the
    /// log-domain over the stored slices.
    pub fn evaluate(&self, z: f64, t: f64) -> Result<(f64, f64)> {
        let first = self.times[0];
        let last = *self.times.last().unwrap();
        if t < first - 1e-9 || t > last + 1e-9 {
            return Err(Error::Coverage(format!(
                "t={t} outside stored range [{first}, {last}]"
            )));
        }
        let t = t.clamp(first, last);
        let k = match self.times.iter().position(|&s| s >= t - 1e-12) {
            Some(k) => k,
            None => self.times.len() - 1,
        };
        let logu = if (self.times[k] - t).abs() <= 1e-9 || k == 0 {
            self.interp_logu(k, z)?
        } else {
            let (t0, t1) = (self.times[k - 1], self.times[k]);
            let a = self.interp_logu(k - 1, z)?;
            let b = self.interp_logu(k, z)?;
            let w = (t - t0) / (t1 - t0);
            a + w * (b - a)
        };
        Ok((logu.exp(), logu))
    }

    /// Position where the stored slice at time `t` crosses `level`.
    ///
    /// Requires a CDF-type field; linear interpolation on the level values.
    pub fn front_position(&self, level: f64, t: f64) -> Result<f64> {
        if !self.cdf_type {
            return Err(Error::InvalidInput(
                "front positions require a CDF-type field".into(),
            ));
        }
        if !(0.0 < level && level < 1.0) {
            return Err(Error::InvalidInput(format!(
                "level must lie in (0,1), got {level}"
            )));
        }
        let i = self.slice_index(t)?;
        let row = self.slice_u(i);
        let nodes = self.slice_nodes(i);
        let k = row
            .windows(2)
            .position(|w| w[0] < level && w[1] >= level)
            .ok_or_else(|| Error::Coverage(format!("level {level} not crossed at t={t}")))?;
        let frac = (level - row[k]) / (row[k + 1] - row[k]);
        Ok(nodes[k] + frac * self.grid.dz)
    }

    /// Median position of the stored slice at time `t`.
    pub fn median(&self, t: f64) -> Result<f64> {
        self.front_position(0.5, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::grid::WindowPolicy;

    fn toy_field() -> SolutionField {
        let grid =
            SpaceTimeGrid::new(0.0, 1.0, 0.25, 0.5, 1.0, WindowPolicy::MovingWithFront).unwrap();
        // two slices, 5 nodes each; logistic-ish CDF rows stored as log u
        let rows: Vec<f64> = [0.01, 0.2, 0.5, 0.8, 0.99, 0.02, 0.3, 0.6, 0.9, 0.995]
            .iter()
            .map(|u: &f64| u.ln())
            .collect();
        SolutionField::new(grid, vec![0.5, 1.0], rows, vec![0, 1], Scheme::Fd, true).unwrap()
    }

    #[test]
    fn evaluate_interpolates_and_fills_right() {
        let f = toy_field();
        let (u, logu) = f.evaluate(0.5, 0.5).unwrap();
        assert!((u - 0.5).abs() < 1e-12);
        assert!((logu - 0.5f64.ln()).abs() < 1e-12);
        // second slice is shifted right by one node: its window is [0.25, 1.25]
        let (u, _) = f.evaluate(0.25, 1.0).unwrap();
        assert!((u - 0.02).abs() < 1e-12);
        // right of the window reads as exactly 1
        let (u, logu) = f.evaluate(3.0, 1.0).unwrap();
        assert_eq!(u, 1.0);
        assert_eq!(logu, 0.0);
        // left of the window is a coverage error
        assert!(f.evaluate(0.1, 1.0).is_err());
    }

    #[test]
    fn median_crossing() {
        let f = toy_field();
        let m = f.median(0.5).unwrap();
        assert!((m - 0.5).abs() < 1e-12);
        let m = f.median(1.0).unwrap();
        // second slice is shifted one node right: u=0.3 sits at z=0.5 and
        // u=0.6 at z=0.75, so the crossing is at 0.5 + 0.25·(0.2/0.3)
        let expect = 0.5 + 0.25 * (0.5 - 0.3) / 0.3;
        assert!((m - expect).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_time_rejected() {
        let f = toy_field();
        assert!(f.evaluate(0.5, 2.0).is_err());
        assert!(f.evaluate(0.5, 0.1).is_err());
    }
}
