//! Explicit reference solver for `∂_t u = Δ(u²)/2`.

use super::{march, Snapshot, SolverConfig, StepRecord, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{mass, GridField, PeriodicGrid};

/// Explicit steps grouped into one [`StepRecord`].
const STEPS_PER_RECORD: usize = 1000;
const DENSITY_FLOOR: f64 = 1e-6;

/// `c h² / max(max u, 1e-6)` with `c = 0.2` for `d ≤ 2` and `c = 0.15` in 3D.
pub fn pme_time_step(u: &GridField) -> f64 {
    let grid = u.grid();
    step_coefficient(grid) * grid.spacing().powi(2) / u.max().max(DENSITY_FLOOR)
}

fn step_coefficient(grid: &PeriodicGrid) -> f64 {
    if grid.dim() == 3 {
        0.15
    } else {
        0.2
    }
}

/// One explicit step in place; returns the largest `|∇(u²/2)| / u` over faces.
fn explicit_step(grid: &PeriodicGrid, u: &[f64], out: &mut [f64], w: &mut [f64], dt: f64) -> f64 {
    let n = grid.n();
    let h = grid.spacing();
    let r = dt / (h * h);
    for (wi, ui) in w.iter_mut().zip(u) {
        *wi = 0.5 * ui * ui;
    }
    out.copy_from_slice(u);
    let mut vmax = 0.0f64;
    for axis in 0..grid.dim() {
        let stride = grid.stride(axis);
        for j in 0..u.len() {
            let idx = (j / stride) % n;
            let right = if idx + 1 == n {
                j + stride - n * stride
            } else {
                j + stride
            };
            let dw = w[right] - w[j];
            out[j] += r * dw;
            out[right] -= r * dw;
            let umax = u[j].max(u[right]);
            if umax > 0.0 {
                vmax = vmax.max(dw.abs() / (h * umax));
            }
        }
    }
    vmax
}

/// Advances `u0` (any nonnegative field; mass need not be 1) to every
/// snapshot time. If a step raises `max u` by more than `1e-8`, it is redone
/// with half the step.
pub fn solve_pme_reference(u0: &GridField, cfg: &SolverConfig) -> Result<Trajectory> {
    if u0.min() < -crate::grid::DENSITY_CLAMP {
        return Err(Error::InvalidDensity(
            "initial data has negative values".into(),
        ));
    }
    let grid = *u0.grid();
    let kind = u0.kind();
    let start = u0.map(|v| v.max(0.0))?;
    let coef = step_coefficient(&grid);
    march(
        cfg,
        start,
        |u| Snapshot::Field(u.clone()),
        |u, t, remaining| {
            let mut cur = u.values().to_vec();
            let mut next = vec![0.0; cur.len()];
            let mut w = vec![0.0; cur.len()];
            let mut advanced = 0.0;
            let mut vmax = 0.0f64;
            let m0 = mass(u);
            let base_dt = pme_time_step(u);
            for _ in 0..STEPS_PER_RECORD {
                let left = remaining - advanced;
                if left <= 1e-14 * remaining.max(1e-300) {
                    break;
                }
                let peak = cur.iter().cloned().fold(0.0, f64::max);
                let mut dt = (coef * grid.spacing().powi(2) / peak.max(DENSITY_FLOOR)).min(left);
                loop {
                    let v = explicit_step(&grid, &cur, &mut next, &mut w, dt);
                    let new_peak = next.iter().cloned().fold(0.0, f64::max);
                    if new_peak <= peak + 1e-8 {
                        vmax = vmax.max(v);
                        break;
                    }
                    dt *= 0.5;
                    if dt < 1e-12 * base_dt {
                        return Err(Error::DtUnderflow {
                            dt,
                            time: t + advanced,
                        });
                    }
                }
                std::mem::swap(&mut cur, &mut next);
                advanced = if dt >= left { remaining } else { advanced + dt };
            }
            for v in &mut cur {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let record = StepRecord {
                time: t,
                dt: advanced,
                mass: m0,
                max_velocity: vmax,
                interaction_dissipation: None,
                entropy_dissipation: None,
            };
            Ok((GridField::new(grid, cur, kind)?, record))
        },
    )
}
