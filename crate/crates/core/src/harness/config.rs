use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{Integrator, SolverConfig, VelocityMode};
use crate::error::{Error, Result};
use crate::grid::{normalize_density, FieldKind, GridField, PeriodicGrid};
use crate::kernels::{laplace_kernel, matern_kernel, KernelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ExperimentKind {
    Rate1d,
    RateGeneralD,
    EnergyDecay,
    KernelValidation,
    ParticleConsistency,
    Commutator1d,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelConfig {
    Laplace,
    Matern { s: f64 },
}

impl KernelConfig {
    pub fn spec(&self, dim: usize) -> Result<KernelSpec> {
        match *self {
            KernelConfig::Laplace => laplace_kernel(dim),
            KernelConfig::Matern { s } => matern_kernel(s, dim),
        }
    }
}

/// Initial density, normalised to unit mass after evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum InitialCondition {
    Uniform,
    /// `1 + amplitude · Π_a sin(2π x_a)`.
    Sine {
        amplitude: f64,
    },
    /// A periodised Gaussian bump over a constant floor.
    Gaussian {
        center: Vec<f64>,
        width: f64,
        floor: f64,
    },
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Sine { amplitude: 0.5 }
    }
}

impl InitialCondition {
    pub fn evaluate(&self, grid: PeriodicGrid) -> Result<GridField> {
        let d = grid.dim();
        let raw = match self {
            InitialCondition::Uniform => return Ok(GridField::uniform(grid)),
            InitialCondition::Sine { amplitude } => {
                if amplitude.abs() >= 1.0 {
                    return Err(Error::Config(format!(
                        "sine amplitude {amplitude} makes the density vanish"
                    )));
                }
                let a = *amplitude;
                GridField::from_fn(grid, FieldKind::Scalar, |x| {
                    1.0 + a * x.iter().map(|c| (2.0 * PI * c).sin()).product::<f64>()
                })?
            }
            InitialCondition::Gaussian {
                center,
                width,
                floor,
            } => {
                if center.len() != d || !(*width > 0.0) || *floor < 0.0 {
                    return Err(Error::Config(
                        "gaussian needs a d-point centre, width > 0 and floor ≥ 0".into(),
                    ));
                }
                GridField::from_fn(grid, FieldKind::Scalar, |x| {
                    let r2: f64 = x
                        .iter()
                        .zip(center)
                        .map(|(a, b)| crate::grid::wrap_displacement(a - b).powi(2))
                        .sum();
                    floor + (-r2 / (2.0 * width * width)).exp()
                })?
            }
        };
        if !raw.max().is_finite() || raw.min() < 0.0 {
            return Err(Error::Config(
                "initial condition is not a bounded density".into(),
            ));
        }
        normalize_density(&raw)
    }
}

fn default_gamma() -> f64 {
    1.2
}

fn default_snapshots() -> usize {
    11
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub dimension: usize,
    pub n: usize,
    pub kernel: KernelConfig,
    pub epsilons: Vec<f64>,
    /// Intermediate scale `η = ε^γ`.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub horizon: f64,
    #[serde(default)]
    pub initial: InitialCondition,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Equispaced snapshots on `[0, T]`, endpoints included.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    /// Grid of the diffusion reference; defaults to `min(n, 1024)`.
    #[serde(default)]
    pub reference_n: Option<usize>,
    /// Target regularisation of the entropic distance.
    #[serde(default)]
    pub sinkhorn_reg: Option<f64>,
    /// `(particles, grid size)` refinement ladder for particle runs.
    #[serde(default)]
    pub particle_ladder: Option<Vec<(usize, usize)>>,
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.dimension, self.n)
    }

    pub fn reference_n(&self) -> usize {
        self.reference_n.unwrap_or(self.n.min(1024))
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        SolverConfig::equispaced(self.horizon, self.snapshots)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        let h = grid.spacing();
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(
                "epsilon list must be strictly descending".into(),
            ));
        }
        if let Some(e) = self.epsilons.iter().find(|&&e| e < 2.0 * h) {
            return Err(Error::Config(format!(
                "epsilon {e} is below 2h = {}",
                2.0 * h
            )));
        }
        if self.epsilons.is_empty() && self.experiment != ExperimentKind::KernelValidation {
            return Err(Error::Config("epsilon list is empty".into()));
        }
        if !(self.gamma > 1.0) {
            return Err(Error::Config(format!("gamma {} must exceed 1", self.gamma)));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if self.snapshots < 2 {
            return Err(Error::Config("need at least two snapshots".into()));
        }
        let r = self.reference_n();
        if r == 0 || (r != self.n && (!self.n.is_multiple_of(r) && !r.is_multiple_of(self.n))) {
            return Err(Error::Config(format!(
                "reference grid {r} incompatible with n = {}",
                self.n
            )));
        }
        self.kernel.spec(self.dimension)?;
        self.initial.evaluate(grid)?;
        match self.experiment {
            ExperimentKind::Rate1d | ExperimentKind::Commutator1d if self.dimension != 1 => Err(
                Error::Config("one-dimensional experiment with dimension != 1".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// Which solver a single simulation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SimulationKind {
    Aggregation,
    Pme,
    Particles,
}

/// Input of the `run-aggregation`, `run-pme` and `run-particles` commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimulationConfig {
    pub dimension: usize,
    pub n: usize,
    #[serde(default)]
    pub kernel: Option<KernelConfig>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub initial: InitialCondition,
    pub horizon: f64,
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default)]
    pub cfl: Option<f64>,
    #[serde(default)]
    pub integrator: Integrator,
    /// Particle count (1D) or particles per axis (d ≥ 2).
    #[serde(default)]
    pub particles: Option<usize>,
    #[serde(default)]
    pub velocity_mode: VelocityMode,
    pub output_dir: PathBuf,
}

impl SimulationConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig::equispaced(self.horizon, self.snapshots)?
            .with_integrator(self.integrator);
        match self.cfl {
            Some(c) => cfg.with_cfl(c),
            None => Ok(cfg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> &'static str {
        r#"{"experiment":"rate1d","dimension":1,"n":256,"kernel":{"family":"laplace"},
            "epsilons":[0.2,0.1,0.05],"horizon":0.1,"outputDir":"out"}"#
    }

    #[test]
    fn parses_with_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(sample()).unwrap();
        assert_eq!(cfg.gamma, 1.2);
        assert_eq!(cfg.snapshots, 11);
        assert_eq!(cfg.initial, InitialCondition::Sine { amplitude: 0.5 });
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_unsorted_and_unresolved_scales() {
        let mut cfg: ExperimentConfig = serde_json::from_str(sample()).unwrap();
        cfg.epsilons = vec![0.1, 0.2];
        assert!(cfg.validate().is_err());
        cfg.epsilons = vec![0.2, 0.001];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sine_initial_condition_has_unit_mass() {
        let grid = PeriodicGrid::new(2, 32).unwrap();
        let u = InitialCondition::default().evaluate(grid).unwrap();
        assert!((crate::grid::mass(&u) - 1.0).abs() < 1e-12);
        assert!(u.min() > 0.0);
        assert!(InitialCondition::Sine { amplitude: 1.5 }
            .evaluate(grid)
            .is_err());
    }
}
