//! Run directory layout:
//!
//! ```text
//! config.json              normalized run configuration
//! trace.csv                diagnostics per recorded step
//! boundary.csv             endpoint values of f_i² and ∫H ds per recorded step
//! snapshots/snapshot_NNNN.json
//! report.json              singularity analysis
//! status.json              why the run stopped
//! *.svg                    plots
//! manifest.json            SHA-256 of every other file
//! ```
//!
//! Floats are written in shortest round-trip scientific notation, so
//! reading a directory back reproduces the in-memory values exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{FactorRow, FlowTrace, SingularityReport, TraceRow};
use crate::error::{Error, Result};
use crate::grid::ProfileState;

pub const TRACE_FILE: &str = "trace.csv";
pub const BOUNDARY_FILE: &str = "boundary.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const REPORT_FILE: &str = "report.json";
pub const STATUS_FILE: &str = "status.json";
pub const CONFIG_FILE: &str = "config.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Column order of `trace.csv` for `r` factors.
pub fn trace_columns(r: usize) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "dt", "kappa", "h_min", "h_max"].map(String::from).to_vec();
    for i in 1..=r {
        cols.push(format!("f{i}sq_min"));
        cols.push(format!("f{i}sq_max"));
    }
    cols.push("kahler_res".into());
    cols.push("heat_res".into());
    cols.extend((1..=r).map(|i| format!("grad_sup_{i}")));
    cols.extend((1..=r).map(|i| format!("liyau_sup_{i}")));
    cols.push("arclength".into());
    cols
}

/// Column order of `boundary.csv` for `r` factors.
pub fn boundary_columns(r: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for i in 1..=r {
        cols.push(format!("f{i}sq_left"));
        cols.push(format!("f{i}sq_right"));
    }
    cols.push("fiber_integral".into());
    cols
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

fn write_csv(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e))?;
    let io = |e: csv::Error| Error::format(path, e);
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.into_iter().map(fmt)).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_csv(
    path: &Path,
    expected: impl Fn(usize) -> Vec<String>,
    fixed: usize,
    per_factor: usize,
) -> Result<(usize, Vec<Vec<f64>>)> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    })?;
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| Error::format(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let extra = header
        .len()
        .checked_sub(fixed)
        .filter(|e| e % per_factor == 0)
        .ok_or_else(|| Error::format(path, format!("unexpected column count {}", header.len())))?;
    let r = extra / per_factor;
    let want = expected(r);
    if header != want {
        return Err(Error::format(path, format!("columns {header:?} do not match {want:?}")));
    }
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e))?;
        let vals = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(path, format!("row {}: {e}", line + 1)))?;
        rows.push(vals);
    }
    Ok((r, rows))
}

pub fn write_trace_csv(path: &Path, trace: &FlowTrace) -> Result<()> {
    let r = trace.factors;
    let rows = trace.rows.iter().map(|row| {
        let mut v = vec![row.t, row.dt, row.kappa, row.h_min, row.h_max];
        for f in &row.factors {
            v.extend([f.f_sq_min, f.f_sq_max]);
        }
        v.extend([row.kahler_res, row.heat_res]);
        v.extend(row.factors.iter().map(|f| f.grad_sup));
        v.extend(row.factors.iter().map(|f| f.liyau_sup));
        v.push(row.arclength);
        v
    });
    write_csv(path, &trace_columns(r), rows)
}

pub fn write_boundary_csv(path: &Path, trace: &FlowTrace) -> Result<()> {
    let rows = trace.rows.iter().map(|row| {
        let mut v = vec![row.t];
        for f in &row.factors {
            v.extend([f.f_sq_left, f.f_sq_right]);
        }
        v.push(row.fiber_integral);
        v
    });
    write_csv(path, &boundary_columns(trace.factors), rows)
}

/// Rebuilds a trace from `trace.csv` and `boundary.csv` in `dir`.
pub fn read_trace(dir: &Path) -> Result<FlowTrace> {
    let tpath = dir.join(TRACE_FILE);
    let bpath = dir.join(BOUNDARY_FILE);
    let (r, main) = read_csv(&tpath, trace_columns, 8, 4)?;
    let (rb, bnd) = read_csv(&bpath, boundary_columns, 2, 2)?;
    if rb != r || bnd.len() != main.len() {
        return Err(Error::format(&bpath, "does not line up with trace.csv"));
    }
    let mut trace = FlowTrace::new(r);
    for (m, b) in main.iter().zip(&bnd) {
        if m[0] != b[0] {
            return Err(Error::format(&bpath, format!("time {} does not match trace row {}", b[0], m[0])));
        }
        let factors = (0..r)
            .map(|i| FactorRow {
                f_sq_min: m[5 + 2 * i],
                f_sq_max: m[6 + 2 * i],
                grad_sup: m[7 + 2 * r + i],
                liyau_sup: m[7 + 3 * r + i],
                f_sq_left: b[1 + 2 * i],
                f_sq_right: b[2 + 2 * i],
            })
            .collect();
        trace.push(TraceRow {
            t: m[0],
            dt: m[1],
            kappa: m[2],
            h_min: m[3],
            h_max: m[4],
            kahler_res: m[5 + 2 * r],
            heat_res: m[6 + 2 * r],
            arclength: m[7 + 4 * r],
            fiber_integral: b[1 + 2 * r],
            factors,
        });
    }
    Ok(trace)
}

/// One cell of a snapshot file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotCell {
    pub sigma: f64,
    pub a: f64,
    pub h: f64,
    pub f: Vec<f64>,
}

/// JSON layout of a stored profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotFile {
    pub t: f64,
    pub cells: Vec<SnapshotCell>,
}

impl From<&ProfileState> for SnapshotFile {
    fn from(st: &ProfileState) -> Self {
        SnapshotFile {
            t: st.t,
            cells: (0..st.cells())
                .map(|j| SnapshotCell {
                    sigma: st.sigma_at(j),
                    a: st.a[j],
                    h: st.h[j],
                    f: st.f.iter().map(|fi| fi[j]).collect(),
                })
                .collect(),
        }
    }
}

impl SnapshotFile {
    pub fn to_state(&self) -> Result<ProfileState> {
        let r = self.cells.first().map_or(0, |c| c.f.len());
        let mut f = vec![Vec::with_capacity(self.cells.len()); r];
        for c in &self.cells {
            if c.f.len() != r {
                return Err(Error::LengthMismatch { expected: r, found: c.f.len() });
            }
            for (i, v) in c.f.iter().enumerate() {
                f[i].push(*v);
            }
        }
        ProfileState::new(
            self.t,
            self.cells.iter().map(|c| c.a).collect(),
            self.cells.iter().map(|c| c.h).collect(),
            f,
        )
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e))
}

pub fn write_snapshots(dir: &Path, snapshots: &[ProfileState]) -> Result<()> {
    let sdir = dir.join(SNAPSHOT_DIR);
    if sdir.exists() {
        fs::remove_dir_all(&sdir).map_err(|e| Error::io(&sdir, e))?;
    }
    fs::create_dir_all(&sdir).map_err(|e| Error::io(&sdir, e))?;
    for (i, st) in snapshots.iter().enumerate() {
        write_json(&sdir.join(format!("snapshot_{i:04}.json")), &SnapshotFile::from(st))?;
    }
    Ok(())
}

/// Snapshots in stored order.
pub fn read_snapshots(dir: &Path) -> Result<Vec<ProfileState>> {
    let sdir = dir.join(SNAPSHOT_DIR);
    let mut paths: Vec<PathBuf> = fs::read_dir(&sdir)
        .map_err(|e| Error::io(&sdir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| read_json::<SnapshotFile>(p)?.to_state().map_err(|e| Error::format(p, e)))
        .collect()
}

pub fn write_report(dir: &Path, report: &SingularityReport) -> Result<()> {
    write_json(&dir.join(REPORT_FILE), report)
}

pub fn read_report(dir: &Path) -> Result<SingularityReport> {
    read_json(&dir.join(REPORT_FILE))
}

/// How a run ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    pub halt: String,
    pub failed: bool,
    pub steps: usize,
    pub regrids: usize,
    pub t_final: f64,
}

pub fn write_status(dir: &Path, status: &RunStatus) -> Result<()> {
    write_json(&dir.join(STATUS_FILE), status)
}

pub fn read_status(dir: &Path) -> Result<RunStatus> {
    read_json(&dir.join(STATUS_FILE))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the run directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

fn collect_files(root: &Path, rel: &str, out: &mut Vec<String>) -> Result<()> {
    let dir = root.join(rel);
    for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
        let entry = entry.map_err(|e| Error::io(&dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let path = if rel.is_empty() { name } else { format!("{rel}/{name}") };
        if entry.path().is_dir() {
            collect_files(root, &path, out)?;
        } else if path != MANIFEST_FILE {
            out.push(path);
        }
    }
    Ok(())
}

/// Hashes every file under `dir` and writes `manifest.json`.
pub fn write_manifest(dir: &Path) -> Result<Manifest> {
    let mut paths = Vec::new();
    collect_files(dir, "", &mut paths)?;
    paths.sort();
    let mut files = Vec::with_capacity(paths.len());
    for path in paths {
        let full = dir.join(&path);
        let data = fs::read(&full).map_err(|e| Error::io(&full, e))?;
        files.push(ManifestEntry {
            path,
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(&data)),
        });
    }
    let manifest = Manifest { files };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Writes the trace, snapshots and report into `dir` and refreshes the manifest.
pub fn write_outputs(trace: &FlowTrace, snapshots: &[ProfileState], report: &SingularityReport, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_trace_csv(&dir.join(TRACE_FILE), trace)?;
    write_boundary_csv(&dir.join(BOUNDARY_FILE), trace)?;
    write_snapshots(dir, snapshots)?;
    write_report(dir, report)?;
    write_manifest(dir)
}
