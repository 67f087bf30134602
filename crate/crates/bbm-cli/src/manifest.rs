//! Run manifests and artifact plumbing.
//!
//! Every command writes its artifacts into one output directory and finishes
//! with a `{command}.manifest.json` recording the resolved configuration,
//! the seeds, and the SHA-256 of every input consumed and output produced.
//! Re-running a manifest with the same tool version reproduces the primary
//! outputs byte for byte (`bbm-cli replay`); consumers of an artifact verify
//! the recorded hashes before trusting it.

use crate::config::validate_artifact_name;
use bbm_core::io::{atomic_write, sha256_file, write_json};
use bbm_core::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// One file this run read or wrote, identified by its role in the command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactRecord {
    /// What the file is to the command (e.g. "field-meta", "batch-samples").
    pub role: String,
    /// Output paths are bare names inside the run's directory; input paths
    /// are absolute.
    pub path: String,
    /// Lowercase hex SHA-256 of the file contents.
    pub sha256: String,
}

/// Complete record of one command invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// Raw command-line arguments, for provenance only; replay runs from the
    /// embedded config.
    pub flags: Vec<String>,
    /// SHA-256 of `config_text`.
    pub config_digest: String,
    /// The resolved single-section config the run actually used; replay
    /// re-executes from this text alone.
    pub config_text: String,
    /// Every explicit seed the run consumed (empty for deterministic
    /// solver-only commands).
    pub seeds: Vec<u64>,
    /// Worker threads active during the run. Outputs do not depend on it
    /// (per-trial seeds are index-derived); recorded for the determinism
    /// declaration.
    pub threads: usize,
    pub inputs: Vec<ArtifactRecord>,
    pub outputs: Vec<ArtifactRecord>,
    pub wall_clock_ms: u64,
    /// Work measure: solver time steps, simulation trials, or report count.
    pub step_count: u64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<RunManifest> {
        let bytes = fs::read(path).map_err(|e| {
            Error::Integrity(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Error::Integrity(format!("malformed manifest {}: {e}", path.display())))
    }

    /// Find an output record by role.
    pub fn output(&self, role: &str) -> Result<&ArtifactRecord> {
        self.outputs.iter().find(|a| a.role == role).ok_or_else(|| {
            Error::Integrity(format!(
                "manifest for `{}` has no '{role}' output artifact",
                self.command
            ))
        })
    }
}

/// The declared output directory; all writes go through it, so nothing
/// lands outside.
#[derive(Debug, Clone)]
pub struct Workspace {
    dir: PathBuf,
}

impl Workspace {
    pub fn create(dir: &Path) -> Result<Workspace> {
        fs::create_dir_all(dir)?;
        Ok(Workspace {
            dir: dir.to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Path of a named file inside the directory. The name must be a bare
    /// stem plus dot-separated extensions — separators and dotfiles are
    /// rejected, so the join cannot escape the directory.
    pub fn file(&self, name: &str) -> Result<PathBuf> {
        let mut parts = name.split('.');
        validate_artifact_name(parts.next().unwrap_or(""))?;
        for ext in parts {
            if ext.is_empty() || !ext.chars().all(|c| c.is_ascii_alphanumeric()) {
                return Err(Error::Configuration(format!(
                    "artifact file name '{name}' has a malformed extension"
                )));
            }
        }
        Ok(self.dir.join(name))
    }
}

/// Accumulates the artifact records of a running command.
pub struct ManifestBuilder {
    command: String,
    seeds: Vec<u64>,
    inputs: Vec<ArtifactRecord>,
    outputs: Vec<ArtifactRecord>,
    step_count: u64,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> ManifestBuilder {
        ManifestBuilder {
            command: command.to_string(),
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            step_count: 0,
            started: Instant::now(),
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.seeds.push(seed);
    }

    pub fn steps(&mut self, n: u64) {
        self.step_count = n;
    }

    /// Record a consumed file with an already-verified hash.
    pub fn input(&mut self, role: &str, path: &Path, sha256: String) {
        self.inputs.push(ArtifactRecord {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256,
        });
    }

    /// Record a produced file (hashing it now); `path` must live directly in
    /// the run's output directory.
    pub fn output(&mut self, role: &str, path: &Path) -> Result<()> {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::Integrity(format!("unnamed artifact {}", path.display())))?;
        self.outputs.push(ArtifactRecord {
            role: role.to_string(),
            path: name.to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    /// Write `{command}.manifest.json` and return its path.
    pub fn write(
        self,
        out: &Workspace,
        flags: &[String],
        config_text: &str,
    ) -> Result<PathBuf> {
        let manifest = RunManifest {
            tool: "bbm-cli".to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.clone(),
            flags: flags.to_vec(),
            config_digest: bbm_core::io::sha256_hex(config_text.as_bytes()),
            config_text: config_text.to_string(),
            seeds: self.seeds,
            threads: rayon::current_num_threads(),
            inputs: self.inputs,
            outputs: self.outputs,
            wall_clock_ms: self.started.elapsed().as_millis() as u64,
            step_count: self.step_count,
        };
        let path = out.file(&format!("{}.manifest.json", self.command))?;
        write_json(&path, &manifest)?;
        Ok(path)
    }
}

/// A producing run referenced as an input: its manifest plus hash-verified
/// access to the artifacts it recorded.
pub struct SourceRun {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    dir: PathBuf,
}

impl SourceRun {
    pub fn load(path: &str) -> Result<SourceRun> {
        let manifest_path = PathBuf::from(path);
        let manifest = RunManifest::load(&manifest_path)?;
        let dir = manifest_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(SourceRun {
            manifest,
            manifest_path,
            dir,
        })
    }

    /// Resolve an output artifact by role, verifying that the file on disk
    /// still hashes to what the producer recorded.
    pub fn artifact(&self, role: &str) -> Result<(PathBuf, String)> {
        let record = self.manifest.output(role)?;
        let path = self.dir.join(&record.path);
        let actual = sha256_file(&path).map_err(|_| {
            Error::Integrity(format!(
                "artifact '{role}' ({}) referenced by {} is missing",
                path.display(),
                self.manifest_path.display()
            ))
        })?;
        if actual != record.sha256 {
            return Err(Error::Integrity(format!(
                "artifact '{role}' ({}) does not hash-match its manifest: recorded {}, found {actual}",
                path.display(),
                record.sha256
            )));
        }
        Ok((path, actual))
    }

    /// Locate and verify a saved field's metadata/payload pair; returns the
    /// base path for `bbm_core::io::load_field`.
    pub fn field_base(&self, mb: &mut ManifestBuilder) -> Result<PathBuf> {
        let (meta, meta_sha) = self.artifact("field-meta")?;
        let (payload, payload_sha) = self.artifact("field-payload")?;
        mb.input("field-meta", &meta, meta_sha);
        mb.input("field-payload", &payload, payload_sha);
        Ok(meta.with_extension(""))
    }

    /// Locate and verify a saved batch's samples/summary pair; returns the
    /// base path for `bbm_core::io::load_batch`.
    pub fn batch_base(&self, mb: &mut ManifestBuilder) -> Result<PathBuf> {
        let (samples, samples_sha) = self.artifact("batch-samples")?;
        let (summary, summary_sha) = self.artifact("batch-summary")?;
        mb.input("batch-samples", &samples, samples_sha);
        mb.input("batch-summary", &summary, summary_sha);
        Ok(samples.with_extension(""))
    }

    /// Load and verify a wave-summary artifact.
    pub fn wave_summary(&self, mb: &mut ManifestBuilder) -> Result<WaveSummary> {
        let (path, sha) = self.artifact("wave-summary")?;
        let bytes = fs::read(&path)?;
        mb.input("wave-summary", &path, sha);
        serde_json::from_slice(&bytes).map_err(|e| {
            Error::Integrity(format!("malformed wave summary {}: {e}", path.display()))
        })
    }
}

/// Scalar results of a wave extraction, consumed by `constants`, `predict`
/// and the ratio-diagnostic suites.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveSummary {
    /// Extraction time of the source slices.
    pub t_source: f64,
    /// Median offset between the profile frame and the centering frame.
    pub median_offset: f64,
    /// Fitted far-left slope of `log w` (the decay rate of the wave tail).
    pub left_slope: f64,
    /// `½∫e^{−√2γz}w(z)²dz` in the profile's own (median-centered) frame.
    pub c1_profile_frame: f64,
    /// Share of the integral supplied by the analytic tail extensions.
    pub c1_tail_fraction: f64,
    /// The constant in the centering frame — the one the asymptotics use.
    pub c1: f64,
    /// Critical-regime constant derived from `c1`.
    pub c2: f64,
    /// L∞ residual of the travelling-wave ODE over `residual_window`.
    pub residual_linf: f64,
    pub residual_window: [f64; 2],
    /// Profile grid size.
    pub n_nodes: usize,
}

/// Write a small numeric table as CSV (shortest round-trip float formatting,
/// so a read-back parses to bit-identical values).
pub fn write_csv_table(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(header)
        .and_then(|_| {
            rows.into_iter()
                .try_for_each(|row| writer.write_record(&row))
        })
        .map_err(|e| Error::Integrity(format!("CSV encoding failed: {e}")))?;
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Integrity(format!("CSV encoding failed: {e}")))?;
    atomic_write(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workspace_rejects_path_separators() {
        let tmp = tempfile::tempdir().unwrap();
        let ws = Workspace::create(tmp.path()).unwrap();
        assert!(ws.file("table.csv").is_ok());
        assert!(ws.file("../table.csv").is_err());
        assert!(ws.file("a/b.csv").is_err());
    }

    #[test]
    fn manifest_round_trips_and_finds_roles() {
        let tmp = tempfile::tempdir().unwrap();
        let ws = Workspace::create(tmp.path()).unwrap();
        let artifact = ws.file("x.csv").unwrap();
        atomic_write(&artifact, b"a,b\n1,2\n").unwrap();
        let mut mb = ManifestBuilder::new("solve");
        mb.output("probe-table", &artifact).unwrap();
        mb.steps(7);
        let path = mb.write(&ws, &[], "schema = \"bbm-run-v1\"\n").unwrap();
        let loaded = RunManifest::load(&path).unwrap();
        assert_eq!(loaded.command, "solve");
        assert_eq!(loaded.step_count, 7);
        assert_eq!(loaded.output("probe-table").unwrap().path, "x.csv");
        assert!(loaded.output("missing").is_err());
        // SourceRun verifies contents against the recorded hash.
        let src = SourceRun::load(path.to_str().unwrap()).unwrap();
        assert!(src.artifact("probe-table").is_ok());
        fs::write(&artifact, b"tampered").unwrap();
        assert!(matches!(
            src.artifact("probe-table"),
            Err(Error::Integrity(_))
        ));
    }
}
