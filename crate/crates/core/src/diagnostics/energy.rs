//! Energy and entropy functionals along aggregation trajectories.

use serde::{Deserialize, Serialize};

use crate::dynamics::{dissipation, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{forward_transform, spectral_resample, GridField};
use crate::kernels::{sqrt_kernel, TorusKernel};

const NEGATIVE_TOL: f64 = 1e-12;
/// Relative slack of the dissipation inequalities.
pub const LEDGER_SLACK: f64 = 1e-6;

fn check_density(u: &GridField) -> Result<()> {
    if u.min() < -NEGATIVE_TOL {
        return Err(Error::InvalidDensity(format!(
            "value {} below zero",
            u.min()
        )));
    }
    Ok(())
}

/// `E(u) = ∫ u²/2`.
pub fn quadratic_energy(u: &GridField) -> Result<f64> {
    check_density(u)?;
    Ok(0.5 * u.values().iter().map(|v| v * v).sum::<f64>() * u.grid().cell_volume())
}

/// `E_ε(u) = ½ ∫ u (R_ε ⋆ u)`.
pub fn interaction_energy(u: &GridField, kernel: &TorusKernel) -> Result<f64> {
    check_density(u)?;
    let phi = kernel.apply(u)?;
    Ok(0.5 * u.inner(&phi)?)
}

/// `∫ u log u`, with `0 log 0 = 0`.
pub fn entropy(u: &GridField) -> Result<f64> {
    check_density(u)?;
    Ok(u.values()
        .iter()
        .filter(|v| **v > 0.0)
        .map(|v| v * v.ln())
        .sum::<f64>()
        * u.grid().cell_volume())
}

/// `‖R_ε^{1/2} ⋆ u‖²_{L²}` by Parseval.
pub fn sqrt_filtered_norm_sq(u: &GridField, kernel: &TorusKernel) -> Result<f64> {
    kernel.grid().check_same(u.grid())?;
    let uh = forward_transform(u);
    Ok(uh
        .coeffs()
        .iter()
        .enumerate()
        .map(|(flat, c)| kernel.multiplier(flat) * c.norm_sqr())
        .sum())
}

/// One row of an [`EnergyLedger`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub time: f64,
    pub quadratic: f64,
    pub interaction: f64,
    pub entropy: f64,
    /// `‖R_ε^{1/2} ⋆ ũ‖²`.
    pub filtered_norm_sq: f64,
    /// `∫₀ᵗ ∫ ũ |∇ũ_ε|²`.
    pub interaction_dissipation: f64,
    /// `∫₀ᵗ ‖∇R_ε^{1/2} ⋆ ũ‖²`.
    pub entropy_dissipation: f64,
    pub energy_excess: f64,
    pub entropy_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub epsilon: f64,
    pub rows: Vec<EnergyRow>,
    /// Snapshots where `‖R½⋆ũ‖² + ∫∫ũ|∇ũ_ε|²` exceeds its initial value beyond the slack.
    pub energy_violations: Vec<usize>,
    /// Snapshots where `∫ũ log ũ + ∫‖∇R½⋆ũ‖²` exceeds its initial value beyond the slack.
    pub entropy_violations: Vec<usize>,
    pub filtered_norm_decreasing: bool,
    pub passed: bool,
}

impl EnergyLedger {
    pub const CSV_HEADER: &'static str = "time,quadratic,interaction,entropy,filtered_norm_sq,interaction_dissipation,entropy_dissipation,energy_excess,entropy_excess";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.time,
                r.quadratic,
                r.interaction,
                r.entropy,
                r.filtered_norm_sq,
                r.interaction_dissipation,
                r.entropy_dissipation,
                r.energy_excess,
                r.entropy_excess
            ));
        }
        out
    }

    pub fn summary(&self) -> serde_json::Value {
        let max_energy = self
            .rows
            .iter()
            .map(|r| r.energy_excess)
            .fold(f64::NEG_INFINITY, f64::max);
        let max_entropy = self
            .rows
            .iter()
            .map(|r| r.entropy_excess)
            .fold(f64::NEG_INFINITY, f64::max);
        serde_json::json!({
            "epsilon": self.epsilon,
            "snapshots": self.rows.len(),
            "max_energy_excess": max_energy,
            "max_entropy_excess": max_entropy,
            "energy_violations": self.energy_violations,
            "entropy_violations": self.entropy_violations,
            "filtered_norm_decreasing": self.filtered_norm_decreasing,
            "pass": self.passed,
        })
    }
}

/// Evaluates both dissipation inequalities along a grid aggregation run.
///
/// Dissipation integrals use the trapezoidal rule over the solver's own steps.
pub fn check_energy_dissipation(traj: &Trajectory, kernel: &TorusKernel) -> Result<EnergyLedger> {
    let fields = traj.fields();
    if fields.is_empty() {
        return Err(Error::SnapshotMismatch("empty trajectory".into()));
    }
    for f in &fields {
        kernel.grid().check_same(f.grid())?;
    }
    if traj
        .steps
        .iter()
        .any(|s| s.interaction_dissipation.is_none() || s.entropy_dissipation.is_none())
    {
        return Err(Error::SnapshotMismatch(
            "trajectory carries no dissipation records".into(),
        ));
    }
    // (time, interaction, entropy) at every step boundary, closing with the final state
    let mut nodes: Vec<(f64, f64, f64)> = traj
        .steps
        .iter()
        .map(|s| {
            (
                s.time,
                s.interaction_dissipation.unwrap_or(0.0),
                s.entropy_dissipation.unwrap_or(0.0),
            )
        })
        .collect();
    let last = fields.last().expect("nonempty");
    let (di, de) = dissipation(last, kernel);
    nodes.push((*traj.times.last().expect("nonempty"), di, de));
    let mut rows = Vec::with_capacity(fields.len());
    let mut node = 0;
    let (mut acc_i, mut acc_e) = (0.0, 0.0);
    for (&time, u) in traj.times.iter().zip(&fields) {
        while node + 1 < nodes.len() && nodes[node + 1].0 <= time + 1e-14 * time.abs().max(1.0) {
            let (a, b) = (nodes[node], nodes[node + 1]);
            let dt = b.0 - a.0;
            acc_i += 0.5 * dt * (a.1 + b.1);
            acc_e += 0.5 * dt * (a.2 + b.2);
            node += 1;
        }
        rows.push(EnergyRow {
            time,
            quadratic: quadratic_energy(u)?,
            interaction: interaction_energy(u, kernel)?,
            entropy: entropy(u)?,
            filtered_norm_sq: sqrt_filtered_norm_sq(u, kernel)?,
            interaction_dissipation: acc_i,
            entropy_dissipation: acc_e,
            energy_excess: 0.0,
            entropy_excess: 0.0,
        });
    }
    let e0 = rows[0].filtered_norm_sq;
    let s0 = rows[0].entropy;
    let scale_e = e0.abs().max(f64::MIN_POSITIVE);
    let scale_s = s0.abs().max(1.0);
    let mut energy_violations = Vec::new();
    let mut entropy_violations = Vec::new();
    for (i, r) in rows.iter_mut().enumerate() {
        r.energy_excess = (r.filtered_norm_sq + r.interaction_dissipation - e0) / scale_e;
        r.entropy_excess = (r.entropy + r.entropy_dissipation - s0) / scale_s;
        if r.energy_excess > LEDGER_SLACK {
            energy_violations.push(i);
        }
        if r.entropy_excess > LEDGER_SLACK {
            entropy_violations.push(i);
        }
    }
    let filtered_norm_decreasing = rows
        .windows(2)
        .all(|w| w[1].filtered_norm_sq <= w[0].filtered_norm_sq * (1.0 + 1e-12));
    let passed = energy_violations.is_empty() && entropy_violations.is_empty();
    Ok(EnergyLedger {
        epsilon: kernel.epsilon(),
        rows,
        energy_violations,
        entropy_violations,
        filtered_norm_decreasing,
        passed,
    })
}

/// `‖u − R_ε^{1/2} ⋆ ũ‖_{L²([0,T]×𝕋^d)}`, trapezoidal in time.
///
/// Fields of `u_traj` on a different grid are resampled spectrally onto the grid of `ut_traj`.
pub fn l2_mollified_error(
    u_traj: &Trajectory,
    ut_traj: &Trajectory,
    kernel: &TorusKernel,
) -> Result<f64> {
    if u_traj.times.len() != ut_traj.times.len()
        || u_traj
            .times
            .iter()
            .zip(&ut_traj.times)
            .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
    {
        return Err(Error::SnapshotMismatch("snapshot times differ".into()));
    }
    let half = sqrt_kernel(kernel)?;
    let sq: Vec<f64> = u_traj
        .fields()
        .into_iter()
        .zip(ut_traj.fields())
        .map(|(u, ut)| {
            let u = if u.grid() == ut.grid() {
                u.clone()
            } else {
                spectral_resample(u, ut.grid().n())?
            };
            let diff = u.difference(&half.apply(ut)?)?;
            diff.inner(&diff)
        })
        .collect::<Result<_>>()?;
    let integral: f64 = u_traj
        .times
        .windows(2)
        .zip(sq.windows(2))
        .map(|(t, s)| 0.5 * (t[1] - t[0]) * (s[0] + s[1]))
        .sum();
    Ok(integral.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{solve_aggregation_grid, SolverConfig};
    use crate::grid::{FieldKind, PeriodicGrid};
    use crate::kernels::{matern_kernel, realize_on_torus};
    use std::f64::consts::PI;

    fn sine(n: usize) -> GridField {
        GridField::from_fn(PeriodicGrid::new(1, n).unwrap(), FieldKind::Density, |x| {
            1.0 + 0.5 * (2.0 * PI * x[0]).sin()
        })
        .unwrap()
    }

    #[test]
    fn uniform_values() {
        let grid = PeriodicGrid::new(1, 64).unwrap();
        let u = GridField::uniform(grid);
        let k = realize_on_torus(&matern_kernel(2.0, 1).unwrap(), 0.1, &grid).unwrap();
        assert!((quadratic_energy(&u).unwrap() - 0.5).abs() < 1e-14);
        assert!((interaction_energy(&u, &k).unwrap() - 0.5).abs() < 1e-12);
        assert!(entropy(&u).unwrap().abs() < 1e-14);
    }

    #[test]
    fn two_level_density() {
        let grid = PeriodicGrid::new(1, 64).unwrap();
        let u = GridField::from_fn(
            grid,
            FieldKind::Density,
            |x| if x[0] < 0.5 { 2.0 } else { 0.0 },
        )
        .unwrap();
        assert!((quadratic_energy(&u).unwrap() - 1.0).abs() < 1e-14);
        assert!((entropy(&u).unwrap() - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn interaction_energy_is_half_filtered_norm() {
        let grid = PeriodicGrid::new(1, 128).unwrap();
        let k = realize_on_torus(&matern_kernel(2.0, 1).unwrap(), 0.1, &grid).unwrap();
        for (_, f) in crate::diagnostics::nonnegative_trials(&grid, 8, 4) {
            let e = interaction_energy(&f, &k).unwrap();
            let half = sqrt_kernel(&k).unwrap().apply(&f).unwrap();
            let norm = half.inner(&half).unwrap();
            assert!((e - 0.5 * norm).abs() < 1e-10 * (1.0 + e));
            assert!((e - 0.5 * sqrt_filtered_norm_sq(&f, &k).unwrap()).abs() < 1e-10 * (1.0 + e));
        }
    }

    #[test]
    fn rejects_negative_density() {
        let grid = PeriodicGrid::new(1, 8).unwrap();
        let u = GridField::scalar(grid, vec![-1.0; 8]).unwrap();
        assert!(entropy(&u).is_err());
    }

    #[test]
    fn ledger_holds_along_sine_run() {
        let u0 = sine(256);
        let k = realize_on_torus(&matern_kernel(2.0, 1).unwrap(), 0.1, u0.grid()).unwrap();
        let traj =
            solve_aggregation_grid(&u0, &k, &SolverConfig::equispaced(0.2, 6).unwrap()).unwrap();
        let ledger = check_energy_dissipation(&traj, &k).unwrap();
        assert!(ledger.passed, "{:?}", ledger.summary());
        assert!(ledger.filtered_norm_decreasing);
        assert!(ledger
            .rows
            .iter()
            .all(|r| r.interaction_dissipation >= 0.0 && r.entropy_dissipation >= 0.0));
        assert_eq!(ledger.to_csv().lines().count(), 7);
    }

    #[test]
    fn ledger_is_flat_for_uniform_data() {
        let u0 = GridField::uniform(PeriodicGrid::new(1, 64).unwrap());
        let k = realize_on_torus(&matern_kernel(2.0, 1).unwrap(), 0.2, u0.grid()).unwrap();
        let traj =
            solve_aggregation_grid(&u0, &k, &SolverConfig::equispaced(0.1, 3).unwrap()).unwrap();
        let ledger = check_energy_dissipation(&traj, &k).unwrap();
        assert!(ledger
            .rows
            .iter()
            .all(|r| r.interaction_dissipation.abs() < 1e-20 && r.energy_excess.abs() < 1e-12));
    }

    #[test]
    fn mollified_error_vanishes_for_uniform() {
        let u0 = GridField::uniform(PeriodicGrid::new(1, 64).unwrap());
        let k = realize_on_torus(&matern_kernel(2.0, 1).unwrap(), 0.2, u0.grid()).unwrap();
        let traj =
            solve_aggregation_grid(&u0, &k, &SolverConfig::equispaced(0.1, 3).unwrap()).unwrap();
        assert!(l2_mollified_error(&traj, &traj, &k).unwrap() < 1e-12);
    }
}
