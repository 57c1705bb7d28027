//! End-to-end orchestration behind the `run` and `analyze` commands.

use std::fs;
use std::path::Path;

use crate::analysis::{analyze_run, SingularityReport};
use crate::error::{Error, Result};
use crate::flow::run_flow;

use super::config::{load_config, RunConfig};
use super::output::{read_snapshots, read_trace, write_manifest, write_outputs, write_report, write_status, Manifest, RunStatus, CONFIG_FILE};
use super::plot::{render_plots, PlotOutcome};

#[derive(Debug)]
pub struct RunSummary {
    pub status: RunStatus,
    pub report: SingularityReport,
    pub plots: PlotOutcome,
    pub manifest: Manifest,
}

/// Runs `cfg` and writes every output into `dir`.
///
/// Invalid input is an error; a flow that halts on a failed step still
/// writes its partial outputs and reports `status.failed`.
pub fn execute(cfg: &RunConfig, dir: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let (spec, state0) = cfg.build()?;
    let run = run_flow(&spec, &state0, &cfg.flow)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cpath = dir.join(CONFIG_FILE);
    fs::write(&cpath, cfg.to_json()).map_err(|e| Error::io(&cpath, e))?;

    let report = analyze_run(&spec, &run.trace, &run.snapshots, cfg.flow.stop_floor, &cfg.analysis)?;
    write_outputs(&run.trace, &run.snapshots, &report, dir)?;
    let status = RunStatus {
        halt: run.halt.describe(),
        failed: run.halt.is_failure(),
        steps: run.steps,
        regrids: run.regrids,
        t_final: run.final_state().t,
    };
    write_status(dir, &status)?;
    let plots = if cfg.output.plots { render_plots(dir, None)? } else { PlotOutcome::default() };
    let manifest = write_manifest(dir)?;
    Ok(RunSummary { status, report, plots, manifest })
}

/// Recomputes `report.json` from the trace and snapshots stored in `dir`.
pub fn analyze_dir(dir: &Path) -> Result<SingularityReport> {
    let cfg = load_config(dir.join(CONFIG_FILE))?;
    let spec = cfg.spec()?;
    let trace = read_trace(dir)?;
    let snapshots = read_snapshots(dir)?;
    let report = analyze_run(&spec, &trace, &snapshots, cfg.flow.stop_floor, &cfg.analysis)?;
    write_report(dir, &report)?;
    write_manifest(dir)?;
    Ok(report)
}
