//! `replay` — re-execute a recorded manifest and check that every primary
//! output reproduces byte for byte.
//!
//! The manifest is self-contained: it embeds the resolved single-section
//! config the original run used, so replay needs no other file. Recorded
//! inputs are re-hashed first (a changed input invalidates the
//! reproducibility contract up front), then the command re-runs into the
//! requested output directory and the fresh artifacts are hashed against
//! the recorded digests.

use super::{dispatch, Ctx, Outcome};
use crate::config::RunConfig;
use crate::manifest::{RunManifest, Workspace};
use bbm_core::io::{atomic_write, sha256_file, sha256_hex, write_json};
use bbm_core::{Error, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
struct ReplayedArtifact {
    role: String,
    path: String,
    recorded_sha256: String,
    reproduced_sha256: String,
    identical: bool,
}

#[derive(Debug, Clone, Serialize)]
struct ReplayReport {
    source_manifest: String,
    command: String,
    artifacts: Vec<ReplayedArtifact>,
    byte_identical: bool,
}

pub fn run_replay(
    manifest_path: &Path,
    out_dir: &Path,
    flags: Vec<String>,
) -> Result<Outcome> {
    let manifest = RunManifest::load(manifest_path)?;
    let version = env!("CARGO_PKG_VERSION");
    if manifest.tool_version != version {
        return Err(Error::Integrity(format!(
            "manifest was produced by tool version {}, this binary is {version}; \
             byte-identical replay is contracted only within one version",
            manifest.tool_version
        )));
    }
    if sha256_hex(manifest.config_text.as_bytes()) != manifest.config_digest {
        return Err(Error::Integrity(
            "embedded config does not match its recorded digest".into(),
        ));
    }
    // Inputs must be unchanged, or the original outputs are unreachable.
    for record in &manifest.inputs {
        let actual = sha256_file(Path::new(&record.path)).map_err(|_| {
            Error::Integrity(format!(
                "recorded input '{}' ({}) is missing",
                record.role, record.path
            ))
        })?;
        if actual != record.sha256 {
            return Err(Error::Integrity(format!(
                "recorded input '{}' ({}) changed since the original run",
                record.role, record.path
            )));
        }
    }

    let out = Workspace::create(out_dir)?;
    let config = RunConfig::from_embedded(&manifest.config_text)?;
    let config_copy = out.file(&format!("{}.replay-config.toml", manifest.command))?;
    atomic_write(&config_copy, manifest.config_text.as_bytes())?;

    let ctx = Ctx {
        out,
        config,
        config_text: manifest.config_text.clone(),
        flags,
    };
    // The re-run's own check outcome is irrelevant here: replay certifies
    // reproduction, and a faithfully reproduced failing suite still
    // reproduces. Hard errors propagate.
    let _ = dispatch(&manifest.command, &ctx)?;

    let mut artifacts = Vec::with_capacity(manifest.outputs.len());
    let mut all_identical = true;
    for record in &manifest.outputs {
        let fresh = out_dir.join(&record.path);
        let reproduced = sha256_file(&fresh).unwrap_or_else(|_| "missing".to_string());
        let identical = reproduced == record.sha256;
        all_identical &= identical;
        artifacts.push(ReplayedArtifact {
            role: record.role.clone(),
            path: record.path.clone(),
            recorded_sha256: record.sha256.clone(),
            reproduced_sha256: reproduced,
            identical,
        });
    }
    let report = ReplayReport {
        source_manifest: manifest_path.display().to_string(),
        command: manifest.command.clone(),
        artifacts,
        byte_identical: all_identical,
    };
    let report_path = PathBuf::from(out_dir).join("replay.json");
    write_json(&report_path, &report)?;

    if all_identical {
        println!(
            "replay OK: {} artifacts of `{}` byte-identical",
            report.artifacts.len(),
            manifest.command
        );
        Ok(Outcome::Pass)
    } else {
        for a in report.artifacts.iter().filter(|a| !a.identical) {
            eprintln!(
                "replay mismatch: {} ({}) recorded {} reproduced {}",
                a.role, a.path, a.recorded_sha256, a.reproduced_sha256
            );
        }
        Err(Error::Integrity(format!(
            "replay of `{}` did not reproduce byte-identical outputs (see {})",
            manifest.command,
            report_path.display()
        )))
    }
}
