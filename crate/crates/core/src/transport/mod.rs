//! Wasserstein-2 distances on the torus with the squared periodic distance cost.

mod circle;
mod oracle;
mod sinkhorn;

use serde::{Deserialize, Serialize};

use crate::dynamics::{deposit_particles, ParticleEnsemble};
use crate::error::{Error, Result};
use crate::grid::{torus_distance, wrap_unit, GridField};

pub use circle::{
    circle_objective, w2_circle_1d, w2_circle_atomic, w2_circle_particles, GeodesicData1D, Quantile,
};
pub use oracle::{
    exhaustive_assignment, hungarian, lp_oracle, transport_simplex, ORACLE_ATOM_LIMIT,
};
pub use sinkhorn::{w2_sinkhorn, SinkhornOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportMethod {
    Quantile1d,
    Sinkhorn,
    LpOracle,
}

/// Solver metadata; fields not produced by a method are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TransportMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marginal_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reg: Option<f64>,
    /// Transport cost `Σ π c` of the regularised plan.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_cost: Option<f64>,
    /// Optimal quantile offset of the circle method.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cut: Option<f64>,
    /// Objective evaluations of the cut search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluations: Option<usize>,
    /// Bias bound from depositing particles on a grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deposition_bias: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
}

/// Coupling entry `(source, target, mass)`.
pub type PlanEntry = (usize, usize, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportResult {
    pub distance: f64,
    pub method: TransportMethod,
    pub meta: TransportMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geodesic: Option<GeodesicData1D>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<Vec<PlanEntry>>,
}

/// Points on the torus with nonnegative weights summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    dim: usize,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl AtomicMeasure {
    pub fn new(dim: usize, points: Vec<[f64; 3]>, weights: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!(
                "dimension {dim} not in 1..=3"
            )));
        }
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidArgument(
                "need matching, nonempty points and weights".into(),
            ));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let points = points
            .into_iter()
            .map(|p| {
                let mut q = [0.0; 3];
                for a in 0..dim {
                    q[a] = wrap_unit(p[a]);
                }
                q
            })
            .collect();
        Ok(AtomicMeasure {
            dim,
            points,
            weights,
        })
    }

    /// Equal weights on the given points.
    pub fn uniform(dim: usize, points: Vec<[f64; 3]>) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        let n = points.len();
        Self::new(dim, points, vec![w; n])
    }

    /// Cell masses placed at cell centres.
    pub fn from_field(u: &GridField) -> Result<Self> {
        let grid = u.grid();
        let vol = grid.cell_volume();
        let points = (0..grid.len()).map(|f| grid.node(f)).collect();
        let weights: Vec<f64> = u.values().iter().map(|v| v * vol).collect();
        let total: f64 = weights.iter().sum();
        Self::new(
            grid.dim(),
            points,
            weights.iter().map(|w| w / total).collect(),
        )
    }

    pub fn from_particles(ens: &ParticleEnsemble) -> Result<Self> {
        Self::uniform(ens.dim(), ens.positions().to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Squared torus distance between atom `i` of `self` and atom `j` of `other`.
    pub fn cost(&self, i: usize, other: &AtomicMeasure, j: usize) -> f64 {
        torus_distance(&self.points[i][..self.dim], &other.points[j][..self.dim]).powi(2)
    }
}

/// Distance between a grid density and a particle ensemble: exact quantile
/// integration in 1D, deposition plus Sinkhorn otherwise.
pub fn w2_between_grid_and_particles(
    u: &GridField,
    ens: &ParticleEnsemble,
) -> Result<TransportResult> {
    let grid = u.grid();
    if ens.dim() != grid.dim() {
        return Err(Error::InvalidArgument(
            "ensemble and grid dimensions differ".into(),
        ));
    }
    if grid.dim() == 1 {
        return w2_circle_particles(u, ens);
    }
    let rho = deposit_particles(ens, grid)?;
    let mut res = w2_sinkhorn(u, &rho, &SinkhornOptions::default())?;
    res.meta.deposition_bias = Some(grid.spacing() * (grid.dim() as f64).sqrt() / 2.0);
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;

    #[test]
    fn atomic_measure_validation() {
        assert!(AtomicMeasure::new(1, vec![[0.1, 0.0, 0.0]], vec![0.5]).is_err());
        assert!(AtomicMeasure::new(1, vec![[0.1, 0.0, 0.0]], vec![-1.0]).is_err());
        let m = AtomicMeasure::new(1, vec![[1.25, 0.0, 0.0]], vec![1.0]).unwrap();
        assert_eq!(m.points()[0][0], 0.25);
        let u = GridField::uniform(PeriodicGrid::new(2, 4).unwrap());
        let a = AtomicMeasure::from_field(&u).unwrap();
        assert_eq!(a.len(), 16);
        assert!((a.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
