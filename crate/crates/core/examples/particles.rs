//! Particle method: two-body repulsion and an ensemble against the grid solver.

use pme_lab::dynamics::{
    inverse_cdf_placement, particle_velocity, solve_aggregation_grid, solve_particles,
    ParticleEnsemble, SolverConfig, VelocityMode,
};
use pme_lab::grid::{FieldKind, GridField};
use pme_lab::kernels::{laplace_kernel_1d, realize_on_torus};
use pme_lab::transport::w2_between_grid_and_particles;
use pme_lab::PeriodicGrid;
use std::f64::consts::PI;

fn main() -> pme_lab::Result<()> {
    let grid = PeriodicGrid::new(1, 1024)?;
    let kernel = realize_on_torus(&laplace_kernel_1d(), 0.1, &grid)?;
    let pair = ParticleEnsemble::from_line(&[0.0, 0.3])?;
    for mode in [VelocityMode::Direct, VelocityMode::Grid] {
        let v = particle_velocity(&pair, &kernel, mode)?;
        println!("{mode:?}: v = ({:+.5}, {:+.5})", v[0][0], v[1][0]);
    }

    let u0 = GridField::from_fn(grid, FieldKind::Density, |x| {
        1.0 + 0.5 * (2.0 * PI * x[0]).sin()
    })?;
    let cfg = SolverConfig::equispaced(0.1, 3)?;
    let field = solve_aggregation_grid(&u0, &kernel, &cfg)?;
    let ut = field.final_snapshot().field().expect("grid run").clone();
    for count in [100, 1_000, 10_000] {
        let ens = inverse_cdf_placement(&u0, count)?;
        let traj = solve_particles(&ens, &kernel, &cfg, VelocityMode::Grid)?;
        let last = traj.final_snapshot().particles().expect("particle run");
        println!(
            "N = {count:>6}: W2 to grid solution {:.3e}",
            w2_between_grid_and_particles(&ut, last)?.distance
        );
    }
    Ok(())
}
