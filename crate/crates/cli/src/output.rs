//! Result files, trace CSVs and atomic writes.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use smd_core::format::{format_real, to_json_string};
use smd_core::{IterationRecord, OracleMode, RunResult, Variant};

pub const TRACE_HEADER: [&str; 6] = ["k", "productive", "M_k", "h_k", "g_value", "f_value"];

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// First 8 hex digits of SHA-256 over the comma-joined 17-digit entries.
pub fn digest(x: &[f64]) -> String {
    let canonical = x.iter().map(|&v| format_real(v)).collect::<Vec<_>>().join(",");
    let hash = Sha256::digest(canonical.as_bytes());
    hash[..4].iter().map(|b| format!("{b:02x}")).collect()
}

/// Trace CSV with the fixed header; absent `f_value`s are empty cells.
pub fn trace_csv(trace: &[IterationRecord]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        w.write_record([
            r.k.to_string(),
            u8::from(r.productive).to_string(),
            format_real(r.m_k),
            format_real(r.h_k),
            format_real(r.g_value),
            r.f_value.map(format_real).unwrap_or_default(),
        ])?;
    }
    Ok(w.into_inner()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub problem: String,
    pub variant: Variant,
    pub oracle: OracleMode,
    pub epsilon: f64,
    pub seed: u64,
    pub stop_reason: String,
    #[serde(rename = "N")]
    pub iterations: u64,
    #[serde(rename = "N_I")]
    pub productive: u64,
    #[serde(rename = "M_bar")]
    pub m_bar: f64,
    #[serde(rename = "M_max")]
    pub m_max: f64,
    pub g_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_value: Option<f64>,
    pub x_bar_digest: String,
    pub x_bar: Vec<f64>,
    /// Seconds since the Unix epoch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl SolveReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        problem: &str,
        variant: Variant,
        oracle: OracleMode,
        epsilon: f64,
        seed: u64,
        run: &RunResult,
        g_value: f64,
        f_value: Option<f64>,
        timestamp: bool,
    ) -> Self {
        Self {
            problem: problem.to_owned(),
            variant,
            oracle,
            epsilon,
            seed,
            stop_reason: run.stop_reason.as_str().to_owned(),
            iterations: run.iterations,
            productive: run.productive,
            m_bar: run.m_bar,
            m_max: run.m_max,
            g_value,
            f_value,
            x_bar_digest: digest(&run.x_bar),
            x_bar: run.x_bar.to_vec(),
            timestamp: timestamp.then(now),
        }
    }

    pub fn to_json(&self) -> String {
        to_json_string(self).expect("report serialization cannot fail")
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_and_short() {
        let d = digest(&[0.5, 0.5]);
        assert_eq!(d.len(), 8);
        assert_eq!(d, digest(&[0.5, 0.5]));
        assert_ne!(d, digest(&[0.5, 0.5000000000000001]));
    }

    #[test]
    fn trace_rows() {
        let trace = vec![IterationRecord {
            k: 1,
            productive: true,
            m_k: 1.0,
            h_k: f64::INFINITY,
            g_value: -1.0,
            f_value: None,
        }];
        let text = String::from_utf8(trace_csv(&trace).unwrap()).unwrap();
        assert_eq!(
            text,
            "k,productive,M_k,h_k,g_value,f_value\n1,1,1.0000000000000000e0,inf,-1.0000000000000000e0,\n"
        );
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomic(&dir.path().join("missing/out.txt"), b"x").is_err());
    }
}
