//! Equal-weight particles driven by the mollified velocity `-∇R_ε ⋆ u^N`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{march, Integrator, Snapshot, SolverConfig, StepRecord, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{gradient_spectral, sample_at, wrap_unit, GridField, PeriodicGrid};
use crate::kernels::{has_closed_form, periodized_gradient, TorusKernel};

/// `N` particles of weight `1/N` on the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleEnsemble {
    dim: usize,
    positions: Vec<[f64; 3]>,
}

impl ParticleEnsemble {
    /// Wraps every coordinate into `[0, 1)`.
    pub fn new(dim: usize, positions: Vec<[f64; 3]>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!(
                "dimension {dim} not in 1..=3"
            )));
        }
        if positions.is_empty() {
            return Err(Error::InvalidArgument(
                "ensemble needs at least one particle".into(),
            ));
        }
        let mut positions = positions;
        for p in &mut positions {
            for (a, c) in p.iter_mut().enumerate() {
                if a >= dim {
                    *c = 0.0;
                    continue;
                }
                if !c.is_finite() {
                    return Err(Error::InvalidArgument(
                        "non-finite particle position".into(),
                    ));
                }
                *c = wrap_unit(*c);
            }
        }
        Ok(ParticleEnsemble { dim, positions })
    }

    /// One-dimensional ensemble from scalar positions.
    pub fn from_line(positions: &[f64]) -> Result<Self> {
        Self::new(1, positions.iter().map(|&x| [x, 0.0, 0.0]).collect())
    }

    /// Particles at the nodes of `grid`.
    pub fn on_nodes(grid: &PeriodicGrid) -> Self {
        let positions = (0..grid.len()).map(|flat| grid.node(flat)).collect();
        ParticleEnsemble {
            dim: grid.dim(),
            positions,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.positions.len()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.count() as f64
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    /// First coordinates, for 1D ensembles.
    pub fn line(&self) -> Vec<f64> {
        self.positions.iter().map(|p| p[0]).collect()
    }

    fn displaced(&self, base: &[[f64; 3]], v: &[[f64; 3]], dt: f64) -> Self {
        let positions = base
            .iter()
            .zip(v)
            .map(|(p, v)| {
                let mut q = [0.0; 3];
                for a in 0..self.dim {
                    q[a] = wrap_unit(p[a] + dt * v[a]);
                }
                q
            })
            .collect();
        ParticleEnsemble {
            dim: self.dim,
            positions,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VelocityMode {
    /// `O(N²)` pair sum with the periodised kernel gradient.
    Direct,
    /// Cloud-in-cell deposition, spectral gradient, multilinear interpolation.
    #[default]
    Grid,
}

/// Cloud-in-cell deposition of the empirical measure onto `grid`.
pub fn deposit_particles(ens: &ParticleEnsemble, grid: &PeriodicGrid) -> Result<GridField> {
    if ens.dim() != grid.dim() {
        return Err(Error::InvalidArgument(format!(
            "ensemble dimension {} on a grid of dimension {}",
            ens.dim(),
            grid.dim()
        )));
    }
    let n = grid.n();
    let d = grid.dim();
    let scale = ens.weight() / grid.cell_volume();
    let mut values = vec![0.0; grid.len()];
    for p in ens.positions() {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..d {
            let s = p[a] * n as f64;
            let i = (s.floor() as usize).min(n - 1);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        for corner in 0..(1usize << d) {
            let mut w = scale;
            let mut idx = [0usize; 3];
            for a in 0..d {
                let up = (corner >> a) & 1 == 1;
                w *= if up { frac[a] } else { 1.0 - frac[a] };
                idx[a] = if up { (base[a] + 1) % n } else { base[a] };
            }
            if w != 0.0 {
                values[grid.flatten(&idx[..d])] += w;
            }
        }
    }
    GridField::density(*grid, values)
}

/// `∇R^T(x)` as the Fourier sum over the kernel's grid frequencies.
fn fourier_gradient(kernel: &TorusKernel, x: &[f64]) -> [f64; 3] {
    let grid = kernel.grid();
    let d = grid.dim();
    let mut g = [0.0; 3];
    for flat in 0..grid.len() {
        let idx = grid.unflatten(flat);
        let m = grid.frequencies(flat);
        let phase: f64 = (0..d).map(|a| m[a] as f64 * x[a]).sum::<f64>() * 2.0 * PI;
        let s = phase.sin() * kernel.multiplier(flat);
        for a in 0..d {
            if !grid.is_nyquist(idx[a]) {
                g[a] -= 2.0 * PI * m[a] as f64 * s;
            }
        }
    }
    g
}

fn pair_gradient(kernel: &TorusKernel, closed: bool, x: &[f64]) -> [f64; 3] {
    if closed {
        periodized_gradient(kernel.spec(), kernel.epsilon(), x).expect("closed form checked")
    } else {
        fourier_gradient(kernel, x)
    }
}

/// Velocities `V(x_i) = -(1/N) Σ_j ∇R_ε^T(x_i - x_j)`.
pub fn particle_velocity(
    ens: &ParticleEnsemble,
    kernel: &TorusKernel,
    mode: VelocityMode,
) -> Result<Vec<[f64; 3]>> {
    let d = ens.dim();
    if d != kernel.grid().dim() {
        return Err(Error::InvalidArgument(
            "ensemble and kernel dimensions differ".into(),
        ));
    }
    let v = match mode {
        VelocityMode::Direct => {
            let closed = has_closed_form(kernel.spec());
            let w = ens.weight();
            ens.positions()
                .par_iter()
                .map(|xi| {
                    let mut acc = [0.0; 3];
                    for xj in ens.positions() {
                        let mut diff = [0.0; 3];
                        for a in 0..d {
                            diff[a] = xi[a] - xj[a];
                        }
                        let g = pair_gradient(kernel, closed, &diff[..d]);
                        for a in 0..d {
                            acc[a] -= w * g[a];
                        }
                    }
                    acc
                })
                .collect()
        }
        VelocityMode::Grid => {
            let grid = kernel.grid();
            if kernel.epsilon() < 2.0 * grid.spacing() {
                return Err(Error::UnresolvedKernel {
                    epsilon: kernel.epsilon(),
                    min: 2.0 * grid.spacing(),
                });
            }
            let rho = deposit_particles(ens, grid)?;
            let phi = kernel.apply(&rho)?;
            let grads = gradient_spectral(&phi);
            ens.positions()
                .par_iter()
                .map(|p| {
                    let mut v = [0.0; 3];
                    for a in 0..d {
                        v[a] = -sample_at(&grads[a], &p[..d]);
                    }
                    v
                })
                .collect()
        }
    };
    Ok(v)
}

fn check_finite(v: &[[f64; 3]], time: f64) -> Result<()> {
    if v.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::VelocityBlowUp { time });
    }
    Ok(())
}

/// One explicit step; positions are wrapped into `[0, 1)`.
pub fn step_particles(
    ens: &ParticleEnsemble,
    kernel: &TorusKernel,
    dt: f64,
    integrator: Integrator,
    mode: VelocityMode,
) -> Result<ParticleEnsemble> {
    step_with(ens, kernel, dt, integrator, mode, 0.0).map(|(e, _)| e)
}

fn step_with(
    ens: &ParticleEnsemble,
    kernel: &TorusKernel,
    dt: f64,
    integrator: Integrator,
    mode: VelocityMode,
    time: f64,
) -> Result<(ParticleEnsemble, f64)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dt = {dt} must be positive"
        )));
    }
    let x = ens.positions();
    let k1 = particle_velocity(ens, kernel, mode)?;
    check_finite(&k1, time)?;
    let vmax = k1
        .iter()
        .map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let next = match integrator {
        Integrator::Euler => ens.displaced(x, &k1, dt),
        Integrator::Rk4 => {
            let k2 = particle_velocity(&ens.displaced(x, &k1, dt / 2.0), kernel, mode)?;
            let k3 = particle_velocity(&ens.displaced(x, &k2, dt / 2.0), kernel, mode)?;
            let k4 = particle_velocity(&ens.displaced(x, &k3, dt), kernel, mode)?;
            for k in [&k2, &k3, &k4] {
                check_finite(k, time)?;
            }
            let mut avg = k1.clone();
            for i in 0..avg.len() {
                for a in 0..3 {
                    avg[i][a] = (k1[i][a] + 2.0 * k2[i][a] + 2.0 * k3[i][a] + k4[i][a]) / 6.0;
                }
            }
            ens.displaced(x, &avg, dt)
        }
    };
    Ok((next, vmax))
}

/// Integrates the particle system over `cfg`, with
/// `dt = cfl · min(h / max|V|, 2 / (Λ_ε max ρ))` on the kernel grid.
pub fn solve_particles(
    ens: &ParticleEnsemble,
    kernel: &TorusKernel,
    cfg: &SolverConfig,
    mode: VelocityMode,
) -> Result<Trajectory> {
    let grid = *kernel.grid();
    let lambda = kernel.laplacian_spectral_radius();
    march(
        cfg,
        ens.clone(),
        |e| Snapshot::Particles(e.clone()),
        |e, t, remaining| {
            let v = particle_velocity(e, kernel, mode)?;
            check_finite(&v, t)?;
            let vmax = v
                .iter()
                .map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            let rho_max = deposit_particles(e, &grid)?.max();
            let mut dt = remaining;
            if vmax > 0.0 {
                dt = dt.min(cfg.cfl_factor * grid.spacing() / vmax);
            }
            if lambda * rho_max > 0.0 {
                dt = dt.min(cfg.cfl_factor * 2.0 / (lambda * rho_max));
            }
            let (next, _) = step_with(e, kernel, dt, cfg.integrator, mode, t)?;
            Ok((
                next,
                StepRecord {
                    time: t,
                    dt,
                    mass: 1.0,
                    max_velocity: vmax,
                    interaction_dissipation: None,
                    entropy_dissipation: None,
                },
            ))
        },
    )
}

/// Cell of each of `k` stratified quantiles `(i + 1/2)/k` of the nonnegative
/// cell weights `w` on `n = w.len()` cells, with the position inside the cell.
fn inverse_cdf_cells(w: &[f64], k: usize) -> Result<Vec<(f64, usize)>> {
    let n = w.len();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || w.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidDensity(
            "weights must be nonnegative with positive sum".into(),
        ));
    }
    let h = 1.0 / n as f64;
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for v in w {
        cum.push(cum.last().unwrap() + v / total);
    }
    let mut out = Vec::with_capacity(k);
    let mut j = 0;
    for i in 0..k {
        let t = (i as f64 + 0.5) / k as f64;
        while j + 1 < n && (cum[j + 1] <= t || w[j] == 0.0) {
            j += 1;
        }
        let frac = ((t - cum[j]) / (cum[j + 1] - cum[j])).clamp(0.0, 1.0);
        out.push((wrap_unit((j as f64 - 0.5 + frac) * h), j));
    }
    Ok(out)
}

/// Deterministic 1D placement `x_i = Q_u((i + 1/2)/N)` from the piecewise
/// constant cell density (cell `j` covers `[(j - 1/2)h, (j + 1/2)h)`).
pub fn inverse_cdf_placement(u: &GridField, count: usize) -> Result<ParticleEnsemble> {
    if u.grid().dim() != 1 {
        return Err(Error::InvalidArgument(
            "inverse-CDF placement is one-dimensional".into(),
        ));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("need at least one particle".into()));
    }
    let xs: Vec<f64> = inverse_cdf_cells(u.values(), count)?
        .into_iter()
        .map(|(x, _)| x)
        .collect();
    ParticleEnsemble::from_line(&xs)
}

fn stratify(values: &[f64], dims: usize, n: usize, k: usize) -> Result<Vec<Vec<f64>>> {
    let block = n.pow(dims as u32 - 1);
    let marginal: Vec<f64> = values.chunks(block).map(|c| c.iter().sum()).collect();
    let firsts = inverse_cdf_cells(&marginal, k)?;
    if dims == 1 {
        return Ok(firsts.into_iter().map(|(x, _)| vec![x]).collect());
    }
    let mut out = Vec::with_capacity(k.pow(dims as u32));
    for (x, j) in firsts {
        for mut rest in stratify(&values[j * block..(j + 1) * block], dims - 1, n, k)? {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    Ok(out)
}

/// Tensorised stratified placement of `per_axis^d` particles: stratified
/// quantiles of the first-axis marginal, then recursively of the conditional
/// density in the selected slab.
pub fn stratified_placement(u: &GridField, per_axis: usize) -> Result<ParticleEnsemble> {
    if per_axis == 0 {
        return Err(Error::InvalidArgument(
            "need at least one particle per axis".into(),
        ));
    }
    let grid = u.grid();
    let points = stratify(u.values(), grid.dim(), grid.n(), per_axis)?;
    let positions = points
        .into_iter()
        .map(|p| {
            let mut q = [0.0; 3];
            q[..p.len()].copy_from_slice(&p);
            q
        })
        .collect();
    ParticleEnsemble::new(grid.dim(), positions)
}
