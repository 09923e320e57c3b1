//! CSV serialization and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use muskat_core::diagnostics::DiagnosticsRecord;
use muskat_core::stepper::Trajectory;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// 17 significant digits.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_else(|| "undefined".into())
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.grid().map(|g| g.len()).unwrap_or(0);
    let mut out = String::from("time");
    for j in 0..n {
        let _ = write!(out, ",x_{j}");
    }
    out.push('\n');
    for (t, snap) in traj.times.iter().zip(&traj.snapshots) {
        out.push_str(&fmt(*t));
        for v in snap.values() {
            out.push(',');
            out.push_str(&fmt(*v));
        }
        out.push('\n');
    }
    out
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord], fitted: &[Option<f64>]) -> String {
    let mut out = String::from("time,sup_norm,lip_seminorm,l2_norm,dn_pairing,theta_l2,fitted_rate\n");
    for (d, r) in records.iter().zip(fitted) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt(d.time),
            fmt(d.sup_norm),
            fmt(d.lip_seminorm),
            fmt(d.l2_norm),
            fmt(d.dn_pairing),
            fmt(d.theta_l2),
            fmt_opt(*r)
        );
    }
    out
}

pub fn sigma_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::from("time,sigma_min\n");
    for d in records {
        if let Some(s) = d.sigma_min {
            let _ = writeln!(out, "{},{}", fmt(d.time), fmt(s));
        }
    }
    out
}

/// Long format `time,x,f`, one row per node and snapshot.
pub fn plot_csv(traj: &Trajectory) -> String {
    let mut out = String::from("time,x,f\n");
    if let Some(grid) = traj.grid() {
        let nodes = grid.nodes();
        for (t, snap) in traj.times.iter().zip(&traj.snapshots) {
            for (x, v) in nodes.iter().zip(snap.values()) {
                let _ = writeln!(out, "{},{},{}", fmt(*t), fmt(*x), fmt(*v));
            }
        }
    }
    out
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub config: BTreeMap<String, String>,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub seed: u64,
    pub wall_clock_seconds: f64,
    pub failure: Option<String>,
    pub outputs: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files gathered in memory and written together, so that a run that fails
/// before the write leaves no partial output behind.
#[derive(Default)]
pub struct OutputSet {
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn add(&mut self, name: &str, content: String) {
        self.files.push((name.to_string(), content));
    }

    /// Writes every file and then `manifest.json` listing their digests.
    pub fn write(self, dir: &Path, mut manifest: RunManifest) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        for (name, content) in &self.files {
            std::fs::write(dir.join(name), content)?;
            manifest.outputs.push(FileEntry {
                file: name.clone(),
                bytes: content.len(),
                sha256: sha256_hex(content.as_bytes()),
            });
        }
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
        std::fs::write(&path, json + "\n")?;
        Ok(path)
    }
}
