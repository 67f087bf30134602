//! Numerical laboratory for the lower deviations of the branching Brownian
//! motion (BBM) maximum.
//!
//! The library is organized around four surfaces:
//!
//! - [`math`] — closed-form quantities: regime parameters, the rate function,
//!   Bramson centering, the branching profile `g`, Gaussian tail bounds, the
//!   multiplicative constants and the limiting joint laws.
//! - [`solver`] — two independent numerical schemes for the F-KPP equation
//!   `∂_t u = ½∂_zz u − u(1−u)` with `u(z,0) = 1_{z>0}` (so that
//!   `u(z,t) = P(M_t ≤ z)`), travelling-wave extraction, and the exact
//!   finite-`t` first-branching joint density.
//! - [`sim`] — exact event-driven BBM simulation, rejection conditioning on
//!   `{M_t ≤ z}`, and sampling of the limiting extremal point process in the
//!   deep subcritical regime.
//! - [`verify`] — executable checks: asymptotic-ratio diagnostics, exact and
//!   asymptotic conditional-law comparisons, and inequality audits, all
//!   emitting structured reports.
//!
//! Everything is deterministic: solvers given a grid, simulators given a
//! 64-bit seed. Artifact serialization ([`io`]) round-trips bit-exactly.

pub mod error;
pub mod io;
pub mod math;
pub mod sim;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
