//! Two independent schemes for the front equation
//! `∂_t u = ½∂_zz u − u(1−u)` with CDF-type data, wave extraction, and the
//! exact first-branching decomposition.

pub mod branch;
mod duhamel;
mod fd;
mod field;
mod grid;
mod wave;

pub use branch::{
    conditional_first_branch, first_branch_density, log_first_branch_density, y_given_s,
    FirstBranchConditional,
};
pub use duhamel::solve_duhamel;
pub use fd::{solve_fd, solve_fd_with, FdOptions, Initial};
pub use field::{Scheme, SolutionField};
pub use grid::{SpaceTimeGrid, WindowPolicy};
pub use wave::{extract_wave, wave_ode_residual, WaveProfile};
