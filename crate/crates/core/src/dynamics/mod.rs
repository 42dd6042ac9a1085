//! Time evolution: the particle system, the aggregation equation on a grid,
//! and the porous medium reference solver.

mod aggregation;
mod barenblatt;
mod particles;
mod pme;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridField;

pub(crate) use aggregation::dissipation;
pub use aggregation::{aggregation_time_step, solve_aggregation_grid};
pub use barenblatt::Barenblatt;
pub use particles::{
    deposit_particles, inverse_cdf_placement, particle_velocity, solve_particles, step_particles,
    stratified_placement, ParticleEnsemble, VelocityMode,
};
pub use pme::{pme_time_step, solve_pme_reference};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

/// Horizon, CFL factor, output times and particle integrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub horizon: f64,
    #[serde(default = "default_cfl")]
    pub cfl_factor: f64,
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub integrator: Integrator,
}

fn default_cfl() -> f64 {
    0.5
}

impl SolverConfig {
    pub fn new(horizon: f64, snapshot_times: Vec<f64>) -> Result<Self> {
        let cfg = SolverConfig {
            horizon,
            cfl_factor: default_cfl(),
            snapshot_times,
            integrator: Integrator::Rk4,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `count ≥ 2` equispaced snapshots from 0 to `horizon`.
    pub fn equispaced(horizon: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::Config(format!(
                "need at least 2 snapshots, got {count}"
            )));
        }
        let times = (0..count)
            .map(|i| {
                if i + 1 == count {
                    horizon
                } else {
                    horizon * i as f64 / (count - 1) as f64
                }
            })
            .collect();
        Self::new(horizon, times)
    }

    pub fn with_cfl(mut self, cfl: f64) -> Result<Self> {
        self.cfl_factor = cfl;
        self.validate()?;
        Ok(self)
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::Config(format!(
                "horizon {} must be positive",
                self.horizon
            )));
        }
        if !(self.cfl_factor > 0.0 && self.cfl_factor <= 1.0) {
            return Err(Error::Config(format!(
                "cfl factor {} not in (0, 1]",
                self.cfl_factor
            )));
        }
        if self.snapshot_times.is_empty() {
            return Err(Error::Config("no snapshot times".into()));
        }
        if self.snapshot_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("snapshot times are not sorted".into()));
        }
        if self
            .snapshot_times
            .iter()
            .any(|&t| !(0.0..=self.horizon).contains(&t))
        {
            return Err(Error::Config("snapshot time outside [0, horizon]".into()));
        }
        Ok(())
    }
}

/// Solver state at one output time.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Field(GridField),
    Particles(ParticleEnsemble),
}

impl Snapshot {
    pub fn field(&self) -> Option<&GridField> {
        match self {
            Snapshot::Field(f) => Some(f),
            Snapshot::Particles(_) => None,
        }
    }

    pub fn particles(&self) -> Option<&ParticleEnsemble> {
        match self {
            Snapshot::Particles(p) => Some(p),
            Snapshot::Field(_) => None,
        }
    }
}

/// Quantities recorded for one time step, evaluated at the state the step starts from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub time: f64,
    pub dt: f64,
    pub mass: f64,
    pub max_velocity: f64,
    /// `∫ ũ |∇(R_ε ⋆ ũ)|²` (aggregation only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub interaction_dissipation: Option<f64>,
    /// `‖∇R_ε^{1/2} ⋆ ũ‖²` (aggregation only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub entropy_dissipation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub times: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Grid snapshots; panics on a particle trajectory.
    pub fn fields(&self) -> Vec<&GridField> {
        self.snapshots
            .iter()
            .map(|s| s.field().expect("grid trajectory"))
            .collect()
    }

    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots
            .last()
            .expect("trajectories hold at least one snapshot")
    }

    /// Snapshot times and per-step records as JSON.
    pub fn manifest(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config,
            "times": self.times,
            "steps": self.steps.len(),
            "diagnostics": self.steps,
        })
    }
}

/// Drives `advance(state, t, t_max) -> (new_state, record)` from 0 to the horizon,
/// landing exactly on every snapshot time.
pub(crate) fn march<S: Clone>(
    cfg: &SolverConfig,
    initial: S,
    wrap: impl Fn(&S) -> Snapshot,
    mut advance: impl FnMut(&S, f64, f64) -> Result<(S, StepRecord)>,
) -> Result<Trajectory> {
    cfg.validate()?;
    let mut state = initial;
    let mut t = 0.0;
    let mut times = Vec::with_capacity(cfg.snapshot_times.len());
    let mut snapshots = Vec::with_capacity(cfg.snapshot_times.len());
    let mut steps = Vec::new();
    for &target in &cfg.snapshot_times {
        while target - t > 1e-14 * cfg.horizon.max(1.0) {
            let (next, record) = advance(&state, t, target - t)?;
            if !(record.dt > 0.0) {
                return Err(Error::DtUnderflow {
                    dt: record.dt,
                    time: t,
                });
            }
            t = if record.dt >= target - t {
                target
            } else {
                t + record.dt
            };
            state = next;
            steps.push(record);
        }
        times.push(target);
        snapshots.push(wrap(&state));
    }
    Ok(Trajectory {
        config: cfg.clone(),
        times,
        snapshots,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(1.0, vec![0.0, 0.5, 1.0]).is_ok());
        assert!(SolverConfig::new(1.0, vec![0.0, 1.5]).is_err());
        assert!(SolverConfig::new(1.0, vec![0.5, 0.2]).is_err());
        assert!(SolverConfig::new(0.0, vec![0.0]).is_err());
        assert!(SolverConfig::equispaced(1.0, 3)
            .unwrap()
            .with_cfl(1.5)
            .is_err());
        let cfg = SolverConfig::equispaced(2.0, 5).unwrap();
        assert_eq!(cfg.snapshot_times, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn config_json_defaults() {
        let cfg: SolverConfig =
            serde_json::from_str(r#"{"horizon":1,"snapshot_times":[0,1]}"#).unwrap();
        assert_eq!(cfg.cfl_factor, 0.5);
        assert_eq!(cfg.integrator, Integrator::Rk4);
    }
}
