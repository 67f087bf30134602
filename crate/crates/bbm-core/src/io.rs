//! Artifact persistence: solved fields, conditioned batches, and JSON
//! documents, all written atomically and content-hashed.
//!
//! A field is stored as a metadata CSV (`{base}.csv`, key/value rows) plus a
//! raw little-endian `f64` payload (`{base}.bin`) whose SHA-256 is recorded
//! in the metadata; loading verifies the hash and reconstructs the field
//! bit-exactly. Floating metadata uses the shortest round-trip decimal form,
//! so a save/load cycle reproduces every bit of the original.

use crate::sim::{wilson_interval, ConditionedBatch, Realization};
use crate::solver::{Scheme, SolutionField, SpaceTimeGrid, WindowPolicy};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Version tag of the on-disk field layout.
pub const FIELD_FORMAT_VERSION: u32 = 1;

/// Write `bytes` to `path` atomically: a same-directory temp file is synced
/// and renamed over the target, so readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    if let Some(dir) = dir {
        // Persist the rename itself; ignore filesystems that refuse.
        if let Ok(d) = fs::File::open(dir) {
            let _ = d.sync_all();
        }
    }
    Ok(())
}

/// Lowercase hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Lowercase hex SHA-256 of a file's contents.
pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Serialize `value` as pretty JSON (with a trailing newline) to `path`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::InvalidInput(format!("JSON serialization failed: {e}")))?;
    body.push(b'\n');
    atomic_write(path, &body)
}

fn field_paths(base: &Path) -> (PathBuf, PathBuf) {
    (base.with_extension("csv"), base.with_extension("bin"))
}

fn join_semicolon<T: std::fmt::Display>(values: impl IntoIterator<Item = T>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Save a solved field under `base` (extension ignored); returns the
/// metadata and payload paths `({base}.csv, {base}.bin)`.
pub fn save_field(field: &SolutionField, base: &Path) -> Result<(PathBuf, PathBuf)> {
    let (csv_path, bin_path) = field_paths(base);
    let n_times = field.times().len();
    let mut payload = Vec::with_capacity(n_times * field.grid().n_nodes() * 8);
    let mut offsets = Vec::with_capacity(n_times);
    for i in 0..n_times {
        for v in field.slice_logu(i) {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        // Recover the stored offset from the slice geometry.
        let shift = field.slice_nodes(i)[0] - field.grid().z_min;
        offsets.push((shift / field.grid().dz).round() as i64);
    }
    let digest = sha256_hex(&payload);

    let grid = field.grid();
    let rows: Vec<(&str, String)> = vec![
        ("format_version", FIELD_FORMAT_VERSION.to_string()),
        (
            "scheme",
            match field.scheme() {
                Scheme::Fd => "fd".into(),
                Scheme::Duhamel => "duhamel".into(),
            },
        ),
        ("cdf_type", field.is_cdf_type().to_string()),
        (
            "window",
            match grid.window_policy {
                WindowPolicy::Fixed => "fixed".into(),
                WindowPolicy::MovingWithFront => "moving".into(),
            },
        ),
        ("z_min", grid.z_min.to_string()),
        ("z_max", grid.z_max.to_string()),
        ("dz", grid.dz.to_string()),
        ("dt", grid.dt.to_string()),
        ("t_max", grid.t_max.to_string()),
        ("n_nodes", grid.n_nodes().to_string()),
        ("n_times", n_times.to_string()),
        ("times", join_semicolon(field.times().iter())),
        ("window_offsets", join_semicolon(offsets.iter())),
        ("payload_sha256", digest),
    ];
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["key", "value"])
        .and_then(|_| rows.iter().try_for_each(|(k, v)| writer.write_record([*k, v])))
        .map_err(|e| Error::Integrity(format!("field metadata encoding failed: {e}")))?;
    let meta_bytes = writer
        .into_inner()
        .map_err(|e| Error::Integrity(format!("field metadata encoding failed: {e}")))?;

    atomic_write(&bin_path, &payload)?;
    atomic_write(&csv_path, &meta_bytes)?;
    Ok((csv_path, bin_path))
}

fn meta_get<'a>(map: &'a HashMap<String, String>, key: &str) -> Result<&'a str> {
    map.get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::Integrity(format!("field metadata is missing '{key}'")))
}

fn parse_meta<T: std::str::FromStr>(map: &HashMap<String, String>, key: &str) -> Result<T> {
    meta_get(map, key)?
        .parse()
        .map_err(|_| Error::Integrity(format!("field metadata '{key}' is malformed")))
}

fn parse_list<T: std::str::FromStr>(raw: &str, key: &str) -> Result<Vec<T>> {
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(';')
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Integrity(format!("field metadata '{key}' is malformed")))
        })
        .collect()
}

/// Load a field saved by [`save_field`], verifying the payload hash.
pub fn load_field(base: &Path) -> Result<SolutionField> {
    let (csv_path, bin_path) = field_paths(base);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(&csv_path)
        .map_err(|e| Error::Integrity(format!("cannot read field metadata: {e}")))?;
    let mut map = HashMap::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Error::Integrity(format!("malformed field metadata: {e}")))?;
        if record.len() != 2 {
            return Err(Error::Integrity(
                "field metadata rows must be key/value pairs".into(),
            ));
        }
        map.insert(record[0].to_string(), record[1].to_string());
    }

    let version: u32 = parse_meta(&map, "format_version")?;
    if version != FIELD_FORMAT_VERSION {
        return Err(Error::Integrity(format!(
            "unsupported field format version {version} (expected {FIELD_FORMAT_VERSION})"
        )));
    }
    let scheme = match meta_get(&map, "scheme")? {
        "fd" => Scheme::Fd,
        "duhamel" => Scheme::Duhamel,
        other => {
            return Err(Error::Integrity(format!("unknown scheme '{other}'")));
        }
    };
    let window = match meta_get(&map, "window")? {
        "fixed" => WindowPolicy::Fixed,
        "moving" => WindowPolicy::MovingWithFront,
        other => {
            return Err(Error::Integrity(format!("unknown window policy '{other}'")));
        }
    };
    let cdf_type: bool = parse_meta(&map, "cdf_type")?;
    let grid = SpaceTimeGrid::new(
        parse_meta(&map, "z_min")?,
        parse_meta(&map, "z_max")?,
        parse_meta(&map, "dz")?,
        parse_meta(&map, "dt")?,
        parse_meta(&map, "t_max")?,
        window,
    )?;
    let n_nodes: usize = parse_meta(&map, "n_nodes")?;
    let n_times: usize = parse_meta(&map, "n_times")?;
    if n_nodes != grid.n_nodes() {
        return Err(Error::Integrity(format!(
            "metadata n_nodes {n_nodes} disagrees with the grid ({})",
            grid.n_nodes()
        )));
    }
    let times: Vec<f64> = parse_list(meta_get(&map, "times")?, "times")?;
    let offsets: Vec<i64> = parse_list(meta_get(&map, "window_offsets")?, "window_offsets")?;
    if times.len() != n_times || offsets.len() != n_times {
        return Err(Error::Integrity(
            "metadata slice counts disagree with times/offsets lists".into(),
        ));
    }

    let payload = fs::read(&bin_path)?;
    let digest = sha256_hex(&payload);
    let expected = meta_get(&map, "payload_sha256")?;
    if digest != expected {
        return Err(Error::Integrity(format!(
            "payload hash mismatch for {}: metadata {expected}, file {digest}",
            bin_path.display()
        )));
    }
    if payload.len() != n_times * n_nodes * 8 {
        return Err(Error::Integrity(format!(
            "payload length {} does not match {n_times}×{n_nodes} f64 slices",
            payload.len()
        )));
    }
    let logu: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    SolutionField::new(grid, times, logu, offsets, scheme, cdf_type)
}

/// Scalar summary of a conditioned batch, stored alongside the sample CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchSummary {
    pub trials: u64,
    pub accepted: u64,
    pub threshold: f64,
    pub acceptance_rate: f64,
    /// 95% Wilson interval on the acceptance probability.
    pub wilson_lower: f64,
    pub wilson_upper: f64,
}

impl BatchSummary {
    pub fn from_batch(batch: &ConditionedBatch) -> Self {
        let accepted = batch.accepted.len() as u64;
        let (wilson_lower, wilson_upper) = wilson_interval(accepted, batch.trials);
        BatchSummary {
            trials: batch.trials,
            accepted,
            threshold: batch.threshold,
            acceptance_rate: batch.acceptance_rate,
            wilson_lower,
            wilson_upper,
        }
    }
}

const BATCH_HEADER: [&str; 7] = [
    "seed",
    "tau",
    "x_at_tau",
    "m_t",
    "n_t",
    "branched",
    "top_positions",
];

/// Save a conditioned batch under `base`: realizations in `{base}.csv`,
/// scalar summary in `{base}.json`. Returns both paths.
pub fn save_batch(batch: &ConditionedBatch, base: &Path) -> Result<(PathBuf, PathBuf)> {
    let csv_path = base.with_extension("csv");
    let json_path = base.with_extension("json");
    let mut writer = csv::Writer::from_writer(Vec::new());
    let encode = |r: &Realization, w: &mut csv::Writer<Vec<u8>>| {
        w.write_record([
            r.seed.to_string(),
            r.tau.to_string(),
            r.x_at_tau.to_string(),
            r.m_t.to_string(),
            r.n_t.to_string(),
            r.branched.to_string(),
            join_semicolon(r.top_positions.iter()),
        ])
    };
    writer
        .write_record(BATCH_HEADER)
        .and_then(|_| batch.accepted.iter().try_for_each(|r| encode(r, &mut writer)))
        .map_err(|e| Error::Integrity(format!("batch encoding failed: {e}")))?;
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Integrity(format!("batch encoding failed: {e}")))?;
    atomic_write(&csv_path, &bytes)?;
    write_json(&json_path, &BatchSummary::from_batch(batch))?;
    Ok((csv_path, json_path))
}

/// Load a batch saved by [`save_batch`], cross-checking the summary.
pub fn load_batch(base: &Path) -> Result<ConditionedBatch> {
    let csv_path = base.with_extension("csv");
    let json_path = base.with_extension("json");
    let summary: BatchSummary = serde_json::from_slice(&fs::read(&json_path)?)
        .map_err(|e| Error::Integrity(format!("malformed batch summary: {e}")))?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(&csv_path)
        .map_err(|e| Error::Integrity(format!("cannot read batch samples: {e}")))?;
    let mut accepted = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Error::Integrity(format!("malformed batch record: {e}")))?;
        if record.len() != BATCH_HEADER.len() {
            return Err(Error::Integrity(format!(
                "batch record has {} fields, expected {}",
                record.len(),
                BATCH_HEADER.len()
            )));
        }
        let field = |i: usize| -> &str { &record[i] };
        let parse_f = |i: usize| -> Result<f64> {
            field(i)
                .parse()
                .map_err(|_| Error::Integrity(format!("malformed float '{}'", field(i))))
        };
        accepted.push(Realization {
            seed: field(0)
                .parse()
                .map_err(|_| Error::Integrity(format!("malformed seed '{}'", field(0))))?,
            tau: parse_f(1)?,
            x_at_tau: parse_f(2)?,
            m_t: parse_f(3)?,
            n_t: field(4)
                .parse()
                .map_err(|_| Error::Integrity(format!("malformed count '{}'", field(4))))?,
            branched: field(5)
                .parse()
                .map_err(|_| Error::Integrity(format!("malformed flag '{}'", field(5))))?,
            top_positions: parse_list(field(6), "top_positions")?,
        });
    }
    if accepted.len() as u64 != summary.accepted {
        return Err(Error::Integrity(format!(
            "batch has {} samples but the summary records {}",
            accepted.len(),
            summary.accepted
        )));
    }
    Ok(ConditionedBatch {
        accepted,
        trials: summary.trials,
        threshold: summary.threshold,
        acceptance_rate: summary.acceptance_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_conditioned, SimConfig};
    use crate::solver::{solve_fd, Initial};

    fn small_field() -> SolutionField {
        let grid =
            SpaceTimeGrid::new(-20.0, 20.0, 0.1, 0.05, 2.0, WindowPolicy::Fixed).unwrap();
        solve_fd(&grid, Initial::Heaviside, &[0.5, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn field_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let field = small_field();
        let base = dir.path().join("field");
        let (csv_path, bin_path) = save_field(&field, &base).unwrap();
        assert!(csv_path.exists() && bin_path.exists());
        let loaded = load_field(&base).unwrap();
        assert_eq!(loaded.times(), field.times());
        assert_eq!(loaded.scheme(), field.scheme());
        assert_eq!(loaded.is_cdf_type(), field.is_cdf_type());
        assert_eq!(loaded.grid().n_nodes(), field.grid().n_nodes());
        for i in 0..field.times().len() {
            assert_eq!(loaded.slice_logu(i), field.slice_logu(i), "slice {i}");
            assert_eq!(loaded.slice_nodes(i), field.slice_nodes(i), "nodes {i}");
        }
    }

    #[test]
    fn tampered_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("field");
        let (_, bin_path) = save_field(&small_field(), &base).unwrap();
        let mut payload = fs::read(&bin_path).unwrap();
        payload[17] ^= 0x40;
        fs::write(&bin_path, &payload).unwrap();
        match load_field(&base) {
            Err(Error::Integrity(msg)) => assert!(msg.contains("hash mismatch")),
            other => panic!("expected integrity error, got {other:?}"),
        }
    }

    #[test]
    fn missing_metadata_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("field");
        let (csv_path, _) = save_field(&small_field(), &base).unwrap();
        let text = fs::read_to_string(&csv_path)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("dz,"))
            .collect::<Vec<_>>()
            .join("\n");
        fs::write(&csv_path, text).unwrap();
        assert!(matches!(load_field(&base), Err(Error::Integrity(_))));
    }

    #[test]
    fn batch_round_trip_preserves_samples_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let config = SimConfig::new(1.5, 99).unwrap();
        let batch = simulate_conditioned(&config, 0.5, 10_000, Some(200)).unwrap();
        let base = dir.path().join("batch");
        save_batch(&batch, &base).unwrap();
        let loaded = load_batch(&base).unwrap();
        assert_eq!(loaded.accepted, batch.accepted);
        assert_eq!(loaded.trials, batch.trials);
        assert_eq!(loaded.threshold, batch.threshold);
        assert_eq!(loaded.acceptance_rate, batch.acceptance_rate);
    }

    #[test]
    fn batch_summary_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let config = SimConfig::new(1.0, 3).unwrap();
        let batch = simulate_conditioned(&config, 1.0, 5_000, Some(50)).unwrap();
        let base = dir.path().join("batch");
        let (csv_path, _) = save_batch(&batch, &base).unwrap();
        // Drop one sample row: the summary no longer matches.
        let text = fs::read_to_string(&csv_path).unwrap();
        let kept: Vec<&str> = text.lines().take(text.lines().count() - 1).collect();
        fs::write(&csv_path, kept.join("\n")).unwrap();
        assert!(matches!(load_batch(&base), Err(Error::Integrity(_))));
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("doc.txt");
        atomic_write(&path, b"first").unwrap();
        atomic_write(&path, b"second").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"second");
        // No temp litter left behind.
        let entries: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(entries.len(), 1);
    }

    #[test]
    fn sha256_matches_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
