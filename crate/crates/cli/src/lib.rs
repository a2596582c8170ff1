//! Driver for `z2lattice-core`: configuration, subcommands, output files and
//! run metadata.

pub mod commands;
pub mod config;
pub mod output;
mod plots;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;
use z2lattice_core::fock::FockDim;

pub use commands::{Command, Report};
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(z2lattice_core::Error),
    #[error("requested branch is not available at these parameters")]
    BranchUnavailable,
    #[error("{0} item(s) failed; partial output written")]
    Partial(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

/// Offset used by `--check-truncation`.
pub const TRUNCATION_STEP: usize = 10;
/// Metrics smaller than this are compared in absolute terms only.
pub const DRIFT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub check_truncation: bool,
    pub fixed_step: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftEntry {
    pub name: String,
    pub value: f64,
    pub value_refined: f64,
    pub abs_drift: f64,
    pub rel_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub n_levels: usize,
    pub n_levels_refined: usize,
    /// Largest relative drift among metrics with magnitude above `DRIFT_FLOOR`.
    pub max_rel_drift: f64,
    pub max_abs_drift: f64,
    pub worst: Option<String>,
    pub entries: Vec<DriftEntry>,
}

pub fn drift_report(n: usize, base: &[(String, f64)], refined: &[(String, f64)]) -> DriftReport {
    let mut entries = Vec::new();
    let (mut max_rel, mut max_abs, mut worst) = (0.0f64, 0.0f64, None);
    for (name, v) in base {
        let Some((_, w)) = refined.iter().find(|(k, _)| k == name) else { continue };
        let abs = (w - v).abs();
        let rel = if v.abs() > DRIFT_FLOOR { abs / v.abs() } else { 0.0 };
        // NaN drift is reported as the worst entry
        if !(rel <= max_rel) {
            max_rel = rel;
            worst = Some(name.clone());
        }
        max_abs = max_abs.max(abs);
        entries.push(DriftEntry { name: name.clone(), value: *v, value_refined: *w, abs_drift: abs, rel_drift: rel });
    }
    DriftReport { n_levels: n, n_levels_refined: n + TRUNCATION_STEP, max_rel_drift: max_rel, max_abs_drift: max_abs, worst, entries }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CliError::Config(format!("worker pool: {e}")))
}

/// Runs one subcommand and writes its outputs. Returns the report; item
/// failures surface as `CliError::Partial` after everything is written.
pub fn run(cmd: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<Report, CliError> {
    let mut cfg = cfg.clone();
    if let Some(out) = &opts.out {
        cfg.output.directory = out.clone();
    }
    if let Some(w) = opts.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    let dim = cfg.dim()?;
    let start = Instant::now();
    let pool = pool(cfg.workers)?;
    let (report, drift) = pool.install(|| -> Result<_, CliError> {
        let report = commands::execute(cmd, &cfg, dim, opts.fixed_step)?;
        let drift = if opts.check_truncation {
            let refined = FockDim::new(dim.n() + TRUNCATION_STEP).map_err(CliError::Numerical)?;
            let r2 = commands::execute(cmd, &cfg, refined, opts.fixed_step)?;
            Some(drift_report(dim.n(), &report.metrics, &r2.metrics))
        } else {
            None
        };
        Ok((report, drift))
    })?;
    write_outputs(cmd, &cfg, &report, drift.as_ref(), start.elapsed().as_secs_f64())?;
    if !report.failures.is_empty() {
        for f in &report.failures {
            log::error!("{f}");
        }
        return Err(CliError::Partial(report.failures.len()));
    }
    Ok(report)
}

fn write_outputs(cmd: Command, cfg: &RunConfig, rep: &Report, drift: Option<&DriftReport>, wall: f64) -> Result<(), CliError> {
    let dir: &Path = &cfg.output.directory;
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for t in &rep.tables {
        t.write(dir, cfg.output.format)?;
    }
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = json!({
        "command": cmd.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "truncation": drift,
        "failures": rep.failures,
        "wall_time_s": wall,
        "timestamp": timestamp,
    });
    output::write_file(&dir.join("meta.json"), &(serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n"))?;
    if let Some((name, body)) = plots::script(cmd, cfg.output.format) {
        output::write_file(&dir.join(name), body)?;
    }
    Ok(())
}
