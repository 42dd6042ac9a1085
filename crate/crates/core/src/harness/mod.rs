//! Experiment configs, runners, rate fits and report files.

mod config;
mod experiments;
mod rate;
mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

pub use config::{
    ExperimentConfig, ExperimentKind, InitialCondition, KernelConfig, SimulationConfig,
    SimulationKind,
};
pub use rate::{fit_rate, RateFit, RateReport, RateRow};
pub use report::{emit_report, plot_svg, read_rows_csv, rows_csv, ROWS_HEADER};

use crate::dynamics::{
    inverse_cdf_placement, solve_aggregation_grid, solve_particles, solve_pme_reference,
    stratified_placement, Snapshot,
};
use crate::error::{Error, Result};
use crate::field_io::write_field;
use crate::grid::{mass, PeriodicGrid};
use crate::kernels::realize_on_torus;

/// Result of [`run_experiment`]: named pass flags, the JSON summary and written files.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutcome {
    pub kind: ExperimentKind,
    pub checks: BTreeMap<String, bool>,
    pub summary: serde_json::Value,
    pub report: Option<RateReport>,
    pub files: Vec<PathBuf>,
}

impl ExperimentOutcome {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.values().all(|&b| b)
    }
}

/// Runs one experiment and writes its outputs into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    experiments::dispatch(cfg)
}

/// Mass tolerance per unit time for the `run-*` pass flags.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct SimulationOutcome {
    pub kind: SimulationKind,
    pub max_mass_drift: f64,
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

/// Runs a single solver, writing snapshots and `manifest.json` to `cfg.output_dir`.
pub fn simulate(cfg: &SimulationConfig, kind: SimulationKind) -> Result<SimulationOutcome> {
    let grid = PeriodicGrid::new(cfg.dimension, cfg.n)?;
    let u0 = cfg.initial.evaluate(grid)?;
    let solver = cfg.solver()?;
    let kernel = || -> Result<_> {
        let spec = cfg
            .kernel
            .ok_or_else(|| Error::Config("kernel is required".into()))?
            .spec(cfg.dimension)?;
        let eps = cfg
            .epsilon
            .ok_or_else(|| Error::Config("epsilon is required".into()))?;
        realize_on_torus(&spec, eps, &grid)
    };
    let traj = match kind {
        SimulationKind::Aggregation => solve_aggregation_grid(&u0, &kernel()?, &solver)?,
        SimulationKind::Pme => solve_pme_reference(&u0, &solver)?,
        SimulationKind::Particles => {
            let count = cfg
                .particles
                .ok_or_else(|| Error::Config("particles is required".into()))?;
            let ens = if cfg.dimension == 1 {
                inverse_cdf_placement(&u0, count)?
            } else {
                stratified_placement(&u0, count)?
            };
            solve_particles(&ens, &kernel()?, &solver, cfg.velocity_mode)?
        }
    };
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut files = Vec::new();
    for (i, snap) in traj.snapshots.iter().enumerate() {
        match snap {
            Snapshot::Field(f) => {
                let path = cfg.output_dir.join(format!("snapshot_{i:03}.bin"));
                write_field(&path, f)?;
                files.push(path);
            }
            Snapshot::Particles(p) => {
                let path = cfg.output_dir.join(format!("particles_{i:03}.json"));
                std::fs::write(&path, serde_json::to_string(p.positions())?)?;
                files.push(path);
            }
        }
    }
    let masses: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| match s {
            Snapshot::Field(f) => mass(f),
            Snapshot::Particles(p) => p.weight() * p.count() as f64,
        })
        .collect();
    let max_mass_drift = masses
        .iter()
        .map(|m| (m - masses[0]).abs())
        .fold(0.0, f64::max);
    let passed =
        max_mass_drift <= MASS_TOL * cfg.horizon.max(1.0) && masses.iter().all(|m| m.is_finite());
    let mut manifest = traj.manifest();
    manifest["kind"] = serde_json::to_value(kind)?;
    manifest["max_mass_drift"] = serde_json::json!(max_mass_drift);
    manifest["pass"] = serde_json::json!(passed);
    let path = cfg.output_dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    files.push(path);
    Ok(SimulationOutcome {
        kind,
        max_mass_drift,
        passed,
        files,
    })
}
