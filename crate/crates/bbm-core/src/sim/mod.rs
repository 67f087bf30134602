//! Exact event-driven BBM simulation, rejection conditioning, and limit
//! extremal-process sampling.

mod bbm;
mod condition;
mod extremal;
mod rng;

pub use bbm::{simulate, simulate_batch, Realization, SimConfig};
pub use condition::{
    estimate_probability, simulate_conditioned, wilson_interval, ConditionedBatch,
    ProbabilityEstimate,
};
pub use extremal::{sample_limit_extremal_low, LowExtremalSampler};
pub use rng::{derive_seed, RngStream};
