//! Command implementations. Each command reads one config section, computes,
//! writes its artifacts atomically into the output directory, and finishes
//! with a run manifest.

pub mod constants;
pub mod replay;
pub mod simulate;
pub mod solve;
pub mod verify;

use crate::config::RunConfig;
use crate::manifest::Workspace;
use bbm_core::{Error, Result};

/// What a completed command reports to the exit-code mapping: artifacts were
/// written either way, but failed checks exit 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    CheckFailure,
}

/// Everything a command needs: the resolved single-section config, its
/// canonical text (embedded in the manifest), the output directory, and the
/// raw flags for provenance.
pub struct Ctx {
    pub out: Workspace,
    pub config: RunConfig,
    pub config_text: String,
    pub flags: Vec<String>,
}

/// Dispatch a verb against a prepared context. `replay` is not here: it is
/// the consumer of manifests this dispatcher produces.
pub fn dispatch(verb: &str, ctx: &Ctx) -> Result<Outcome> {
    match verb {
        "solve" => solve::run_solve(ctx),
        "wave" => solve::run_wave(ctx),
        "constants" => constants::run_constants(ctx),
        "predict" => constants::run_predict(ctx),
        "simulate" => simulate::run_simulate(ctx),
        "condition" => simulate::run_condition(ctx),
        "verify" => verify::run_verify(ctx),
        other => Err(Error::Configuration(format!(
            "unknown command '{other}'"
        ))),
    }
}

/// Format a float for table display: enough digits to be useful, not the
/// full round-trip form (artifacts carry that).
pub(crate) fn disp(x: f64) -> String {
    if x == 0.0 || (1e-4..1e7).contains(&x.abs()) {
        format!("{x:.6}")
    } else {
        format!("{x:.6e}")
    }
}
