//! Run configuration: one TOML file, one section per command.
//!
//! Grammar (all keys shown; optional keys marked `?`):
//!
//! ```toml
//! schema = "bbm-run-v1"          # mandatory version key
//!
//! [solve]
//! scheme = "fd"                  # "fd" | "duhamel"
//! z_min = -30.0                  # spatial window and resolutions
//! z_max = 30.0
//! dz = 0.01
//! dt = 0.005
//! t_max = 5.0
//! window = "fixed"               # ? "fixed" (default) | "moving-with-front"
//! store_times = [2.5, 5.0]       # ? explicit slice times (multiples of dt) …
//! store_every = 0.1              # ? … or a uniform cadence; exclusive options
//! probes = [-1.0, 0.0, 1.0]      # ? abscissae reported at the last stored time
//! artifact = "field"             # ? output base name (default "field")
//!
//! [wave]
//! field = "…/solve.manifest.json"  # manifest of the source solve run
//! t_source = 40.0                  # extraction time (t/2 and t/4 slices, when
//!                                  # stored, sharpen the finite-time limit)
//! residual_window = [-5.0, 5.0]    # ? ODE-residual audit interval
//! artifact = "wave"                # ?
//!
//! [constants]
//! alphas = [-2.0, -1.0, 0.0, 0.5]  # drift parameters, each < 1
//! wave = "…/wave.manifest.json"    # wave-integral constants (every row)
//! field = "…/solve.manifest.json"  # ? integral constant Φ(α) (rows with α < −γ)
//! artifact = "constants"           # ?
//!
//! [predict]
//! mode = "line"                    # ? "line" (default) | "moderate" | "near-critical"
//! alpha = -1.0                     # line mode: threshold √2αt
//! a = 6.0                          # moderate / near-critical deviation
//! times = [10.0, 20.0, 30.0]
//! wave = "…/wave.manifest.json"    # ? C⁽¹⁾/C⁽²⁾ source
//! field = "…/solve.manifest.json"  # ? Φ(α) source (low-regime line mode)
//! c1 = 2.0                         # ? literal constants override artifacts
//! c2 = 0.5                         # ?
//! phi = 2.3                        # ?
//! artifact = "predict"             # ?
//!
//! [sim]
//! horizon = 3.0
//! seed = 42                        # mandatory; randomness never defaults
//! n = 1000000                      # replica count
//! population_cap = 2000000         # ?
//! record_top_k = 64                # ?
//! artifact = "batch"               # ?
//!
//! [condition]
//! horizon = 4.0
//! seed = 7                         # mandatory
//! threshold = -5.656854249492381   # conditioning level z …
//! alpha = -1.0                     # … or the line √2α·horizon; exclusive
//! max_trials = 10000000
//! target_accepted = 10000          # ? stop early at this many acceptances
//! population_cap = 2000000         # ?
//! record_top_k = 64                # ?
//! artifact = "batch"               # ?
//!
//! [verify]
//! suite = "bounds"   # bounds | rate | agreement | high | low | critical
//!                    # | moderate | laws
//! field = "…/solve.manifest.json"   # primary field (all suites but rate)
//! field_b = "…/solve.manifest.json" # ? second field (agreement)
//! wave = "…/wave.manifest.json"     # ? constants source (high/critical/moderate)
//! batch = "…/batch.manifest.json"   # ? conditioned samples (laws)
//! alpha = -1.0                      # ? drift parameter (high/low/laws)
//! times = [20.0, 30.0, 40.0]        # ? diagnostic times (high/low/critical)
//! t = 40.0                          # ? horizon (moderate/laws)
//! a_values = [5.0, 6.0, 7.0]        # ? deviations (moderate)
//! a = 2.0                           # ? deviation (laws, law = "moderate")
//! law = "low"                       # ? laws: high | low | critical | moderate
//! alpha_grid = [-2.0, 0.9, 0.05]    # ? rate suite: min, max, step
//! agreement_window = [-15.0, 15.0]  # ? agreement: comparison interval
//! artifact = "reports"              # ?
//! ```
//!
//! Paths are resolved relative to the config file's directory and embedded
//! as absolute paths in the run manifest, so a manifest replays from any
//! working directory on the same machine.

use bbm_core::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// Version key every config must carry.
pub const CONFIG_SCHEMA: &str = "bbm-run-v1";

fn default_field_artifact() -> String {
    "field".into()
}
fn default_wave_artifact() -> String {
    "wave".into()
}
fn default_constants_artifact() -> String {
    "constants".into()
}
fn default_predict_artifact() -> String {
    "predict".into()
}
fn default_batch_artifact() -> String {
    "batch".into()
}
fn default_reports_artifact() -> String {
    "reports".into()
}
fn default_window() -> String {
    "fixed".into()
}
fn default_predict_mode() -> String {
    "line".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub scheme: String,
    pub z_min: f64,
    pub z_max: f64,
    pub dz: f64,
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "default_window")]
    pub window: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store_times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store_every: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<f64>,
    #[serde(default = "default_field_artifact")]
    pub artifact: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    pub field: String,
    pub t_source: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_window: Option<[f64; 2]>,
    #[serde(default = "default_wave_artifact")]
    pub artifact: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub alphas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wave: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(default = "default_constants_artifact")]
    pub artifact: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    #[serde(default = "default_predict_mode")]
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wave: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default = "default_predict_artifact")]
    pub artifact: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub n: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_top_k: Option<usize>,
    #[serde(default = "default_batch_artifact")]
    pub artifact: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionConfig {
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub max_trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_accepted: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_top_k: Option<usize>,
    #[serde(default = "default_batch_artifact")]
    pub artifact: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub suite: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_b: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wave: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement_window: Option<[f64; 2]>,
    #[serde(default = "default_reports_artifact")]
    pub artifact: String,
}

/// The full config document; each command reads exactly one section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wave: Option<WaveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predict: Option<PredictConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<ConditionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
}

impl RunConfig {
    /// Read and validate a config file. TOML errors surface verbatim, which
    /// includes the offending line/column and key.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Configuration(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| {
            Error::Configuration(format!("malformed config {}: {e}", path.display()))
        })?;
        if config.schema != CONFIG_SCHEMA {
            return Err(Error::Configuration(format!(
                "config schema '{}' is not supported (expected '{CONFIG_SCHEMA}')",
                config.schema
            )));
        }
        Ok(config)
    }

    /// Parse a config embedded in a manifest (already resolved and reduced).
    pub fn from_embedded(text: &str) -> Result<RunConfig> {
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            Error::Integrity(format!("manifest embeds a malformed config: {e}"))
        })?;
        if config.schema != CONFIG_SCHEMA {
            return Err(Error::Integrity(format!(
                "manifest config schema '{}' is not supported",
                config.schema
            )));
        }
        Ok(config)
    }

    /// Rewrite artifact-reference paths to absolute, relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) -> Result<()> {
        let mut resolve = |p: &mut String| -> Result<()> {
            let joined = if Path::new(p.as_str()).is_absolute() {
                Path::new(p.as_str()).to_path_buf()
            } else {
                base.join(p.as_str())
            };
            *p = joined
                .to_str()
                .ok_or_else(|| {
                    Error::Configuration(format!("path {} is not valid UTF-8", joined.display()))
                })?
                .to_string();
            Ok(())
        };
        if let Some(w) = &mut self.wave {
            resolve(&mut w.field)?;
        }
        if let Some(c) = &mut self.constants {
            if let Some(p) = &mut c.wave {
                resolve(p)?;
            }
            if let Some(p) = &mut c.field {
                resolve(p)?;
            }
        }
        if let Some(p) = &mut self.predict {
            if let Some(q) = &mut p.wave {
                resolve(q)?;
            }
            if let Some(q) = &mut p.field {
                resolve(q)?;
            }
        }
        if let Some(v) = &mut self.verify {
            for q in [&mut v.field, &mut v.field_b, &mut v.wave, &mut v.batch]
                .into_iter()
                .flatten()
            {
                resolve(q)?;
            }
        }
        Ok(())
    }

    /// Drop every section except the named one; the retained section must be
    /// present. The reduced document is what the manifest embeds.
    pub fn retain_section(&mut self, verb: &str) -> Result<()> {
        let present = match verb {
            "solve" => self.solve.is_some(),
            "wave" => self.wave.is_some(),
            "constants" => self.constants.is_some(),
            "predict" => self.predict.is_some(),
            "simulate" => self.sim.is_some(),
            "condition" => self.condition.is_some(),
            "verify" => self.verify.is_some(),
            other => {
                return Err(Error::Configuration(format!(
                    "no config section defined for command '{other}'"
                )))
            }
        };
        if !present {
            let section = if verb == "simulate" { "sim" } else { verb };
            return Err(Error::Configuration(format!(
                "config has no [{section}] section, required by `{verb}`"
            )));
        }
        let keep = verb;
        if keep != "solve" {
            self.solve = None;
        }
        if keep != "wave" {
            self.wave = None;
        }
        if keep != "constants" {
            self.constants = None;
        }
        if keep != "predict" {
            self.predict = None;
        }
        if keep != "simulate" {
            self.sim = None;
        }
        if keep != "condition" {
            self.condition = None;
        }
        if keep != "verify" {
            self.verify = None;
        }
        Ok(())
    }

    /// Deterministic serialization of the (resolved, reduced) document.
    pub fn canonical_text(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::Configuration(format!("config serialization failed: {e}")))
    }
}

/// Validate an artifact base name: a bare file stem, so every write stays
/// inside the output directory.
pub fn validate_artifact_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(Error::Configuration(format!(
            "artifact name '{name}' must be a bare [A-Za-z0-9_-]+ file stem"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_key_is_enforced() {
        let err = toml::from_str::<RunConfig>("schema = \"other\"\n")
            .map_err(|e| Error::Configuration(e.to_string()))
            .and_then(|c| {
                if c.schema == CONFIG_SCHEMA {
                    Ok(c)
                } else {
                    Err(Error::Configuration("schema".into()))
                }
            });
        assert!(err.is_err());
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let text = "schema = \"bbm-run-v1\"\n[solve]\nscheme = \"fd\"\nz_mim = -1.0\n";
        let err = toml::from_str::<RunConfig>(text).unwrap_err();
        assert!(err.to_string().contains("z_mim"), "{err}");
    }

    #[test]
    fn retained_section_round_trips() {
        let text = r#"
schema = "bbm-run-v1"
[solve]
scheme = "fd"
z_min = -30.0
z_max = 30.0
dz = 0.01
dt = 0.005
t_max = 5.0
probes = [-1.0, 0.0, 1.0]
[sim]
horizon = 3.0
seed = 42
n = 100
"#;
        let mut config: RunConfig = toml::from_str(text).unwrap();
        config.retain_section("solve").unwrap();
        assert!(config.sim.is_none());
        let canon = config.canonical_text().unwrap();
        let back: RunConfig = toml::from_str(&canon).unwrap();
        assert_eq!(back.solve.unwrap().probes, vec![-1.0, 0.0, 1.0]);
        // Canonicalization is a fixed point.
        let mut again: RunConfig = toml::from_str(&canon).unwrap();
        again.retain_section("solve").unwrap();
        assert_eq!(again.canonical_text().unwrap(), canon);
    }

    #[test]
    fn artifact_names_reject_path_escapes() {
        assert!(validate_artifact_name("field-a_1").is_ok());
        for bad in ["", "..", "a/b", "a\\b", ".hidden", "a b"] {
            assert!(validate_artifact_name(bad).is_err(), "{bad}");
        }
    }
}
