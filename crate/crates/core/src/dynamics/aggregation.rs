//! Upwind finite volumes for `∂_t u + div(V_ε u) = 0`, `V_ε = -∇(R_ε ⋆ u)`.

use std::f64::consts::PI;

use super::{march, Snapshot, SolverConfig, StepRecord, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{derivative_from, forward_transform, gradient_spectral, GridField};
use crate::kernels::TorusKernel;

struct Faces {
    /// `-∂_a φ` on the face between cell `j` and `j + e_a`.
    velocity: Vec<GridField>,
    max_speed: f64,
}

fn face_velocities(u: &GridField, kernel: &TorusKernel) -> Faces {
    let grid = *u.grid();
    let mut phi_hat = forward_transform(u);
    phi_hat
        .coeffs_mut()
        .iter_mut()
        .enumerate()
        .for_each(|(flat, c)| *c *= kernel.multiplier(flat));
    let half = 0.5 * grid.spacing();
    let velocity: Vec<GridField> = (0..grid.dim())
        .map(|axis| {
            derivative_from(&phi_hat, axis, half)
                .map(|v| -v)
                .expect("finite")
        })
        .collect();
    let max_speed = velocity
        .iter()
        .map(|v| v.values().iter().fold(0.0, |m: f64, x| m.max(x.abs())))
        .sum();
    Faces {
        velocity,
        max_speed,
    }
}

/// The time step the solver takes from `u`:
/// `cfl · min(h / Σ_a max|V_a|, 2 / (max u · Λ_ε))`, where `Λ_ε` is the
/// spectral radius of `-Δ(R_ε ⋆ ·)`.
pub fn aggregation_time_step(u: &GridField, kernel: &TorusKernel, cfl: f64) -> f64 {
    let faces = face_velocities(u, kernel);
    time_step(u, kernel.laplacian_spectral_radius(), faces.max_speed, cfl)
}

fn time_step(u: &GridField, lambda: f64, max_speed: f64, cfl: f64) -> f64 {
    let h = u.grid().spacing();
    let mut dt = f64::INFINITY;
    if max_speed > 0.0 {
        dt = dt.min(cfl * h / max_speed);
    }
    let stiff = u.max() * lambda;
    if stiff > 0.0 {
        dt = dt.min(cfl * 2.0 / stiff);
    }
    dt
}

/// `(∫ u |∇φ|², ‖∇R^{1/2} ⋆ u‖²)` with `φ = R_ε ⋆ u`.
pub(crate) fn dissipation(u: &GridField, kernel: &TorusKernel) -> (f64, f64) {
    let grid = *u.grid();
    let phi = kernel.apply(u).expect("same grid");
    let grads = gradient_spectral(&phi);
    let interaction = (0..grid.len())
        .map(|i| u.values()[i] * grads.iter().map(|g| g.values()[i].powi(2)).sum::<f64>())
        .sum::<f64>()
        * grid.cell_volume();
    let uh = forward_transform(u);
    let entropy = uh
        .coeffs()
        .iter()
        .enumerate()
        .map(|(flat, c)| {
            let idx = grid.unflatten(flat);
            let m = grid.frequencies(flat);
            let m2: f64 = (0..grid.dim())
                .filter(|&a| !grid.is_nyquist(idx[a]))
                .map(|a| (m[a] * m[a]) as f64)
                .sum();
            4.0 * PI * PI * m2 * kernel.multiplier(flat) * c.norm_sqr()
        })
        .sum();
    (interaction, entropy)
}

fn upwind_step(u: &GridField, faces: &Faces, dt: f64) -> Vec<f64> {
    let grid = *u.grid();
    let n = grid.n();
    let ratio = dt / grid.spacing();
    let vals = u.values();
    let mut out = vals.to_vec();
    for axis in 0..grid.dim() {
        let stride = grid.stride(axis);
        let v = faces.velocity[axis].values();
        for (j, &vf) in v.iter().enumerate() {
            let idx = (j / stride) % n;
            let right = if idx + 1 == n {
                j + stride - n * stride
            } else {
                j + stride
            };
            let flux = if vf > 0.0 {
                vf * vals[j]
            } else {
                vf * vals[right]
            };
            out[j] -= ratio * flux;
            out[right] += ratio * flux;
        }
    }
    out
}

/// Advances `u0` with the upwind scheme, recording dissipation terms per step.
pub fn solve_aggregation_grid(
    u0: &GridField,
    kernel: &TorusKernel,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    kernel.grid().check_same(u0.grid())?;
    let h = u0.grid().spacing();
    if kernel.epsilon() < 2.0 * h {
        return Err(Error::UnresolvedKernel {
            epsilon: kernel.epsilon(),
            min: 2.0 * h,
        });
    }
    let kind = u0.kind();
    if u0.min() < 0.0 {
        return Err(Error::InvalidDensity(
            "initial data has negative values".into(),
        ));
    }
    let lambda = kernel.laplacian_spectral_radius();
    let grid = *u0.grid();
    march(
        cfg,
        u0.clone(),
        |u| Snapshot::Field(u.clone()),
        |u, t, remaining| {
            let faces = face_velocities(u, kernel);
            if !faces.max_speed.is_finite() {
                return Err(Error::VelocityBlowUp { time: t });
            }
            let dt = time_step(u, lambda, faces.max_speed, cfg.cfl_factor).min(remaining);
            let (interaction, entropy) = dissipation(u, kernel);
            let mut next = upwind_step(u, &faces, dt);
            for v in &mut next {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let next = GridField::new(grid, next, kind)?;
            let record = StepRecord {
                time: t,
                dt,
                mass: crate::grid::mass(u),
                max_velocity: faces.max_speed,
                interaction_dissipation: Some(interaction),
                entropy_dissipation: Some(entropy),
            };
            Ok((next, record))
        },
    )
}

impl Trajectory {
    /// Grid snapshots re-validated as densities.
    pub fn density_fields(&self) -> Result<Vec<GridField>> {
        self.fields()
            .into_iter()
            .map(|f| GridField::density(*f.grid(), f.values().to_vec()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{lp_norm, mass, FieldKind, PeriodicGrid};
    use crate::kernels::{laplace_kernel_1d, matern_kernel, realize_on_torus};
    use std::f64::consts::PI;

    fn sine(n: usize) -> GridField {
        let grid = PeriodicGrid::new(1, n).unwrap();
        GridField::from_fn(grid, FieldKind::Density, |x| {
            1.0 + 0.5 * (2.0 * PI * x[0]).sin()
        })
        .unwrap()
    }

    #[test]
    fn uniform_is_stationary() {
        let grid = PeriodicGrid::new(2, 32).unwrap();
        let k = realize_on_torus(&matern_kernel(3.0, 2).unwrap(), 0.2, &grid).unwrap();
        let cfg = SolverConfig::equispaced(1.0, 3).unwrap();
        let traj = solve_aggregation_grid(&GridField::uniform(grid), &k, &cfg).unwrap();
        for f in traj.fields() {
            assert!(f.values().iter().all(|v| (v - 1.0).abs() < 1e-10));
        }
    }

    #[test]
    fn sine_spreads_and_keeps_mass() {
        let u0 = sine(256);
        let k = realize_on_torus(&laplace_kernel_1d(), 0.1, u0.grid()).unwrap();
        let cfg = SolverConfig::equispaced(0.2, 5).unwrap();
        let traj = solve_aggregation_grid(&u0, &k, &cfg).unwrap();
        let fields = traj.fields();
        for w in fields.windows(2) {
            assert!(w[1].max() < w[0].max());
        }
        for f in &fields {
            assert!((mass(f) - 1.0).abs() < 1e-12);
            assert!(f.min() >= 0.0);
        }
        let uniform = GridField::uniform(*u0.grid());
        let d0 = lp_norm(&u0.difference(&uniform).unwrap(), 2.0);
        let d1 = lp_norm(&fields.last().unwrap().difference(&uniform).unwrap(), 2.0);
        assert!(d1 < d0);
        assert!(traj
            .steps
            .iter()
            .all(|s| s.interaction_dissipation.unwrap() >= 0.0));
    }

    #[test]
    fn refined_grid_agrees() {
        let k = |u: &GridField| realize_on_torus(&laplace_kernel_1d(), 0.1, u.grid()).unwrap();
        let cfg = SolverConfig::equispaced(0.05, 2).unwrap();
        let coarse = sine(256);
        let fine = sine(1024);
        let a = solve_aggregation_grid(&coarse, &k(&coarse), &cfg).unwrap();
        let b = solve_aggregation_grid(&fine, &k(&fine), &cfg).unwrap();
        let fa = a.fields()[1];
        let fb = crate::grid::block_average(b.fields()[1], 256).unwrap();
        let diff = lp_norm(&fa.difference(&fb).unwrap(), f64::INFINITY);
        assert!(diff < 2e-2, "{diff}");
    }
}
