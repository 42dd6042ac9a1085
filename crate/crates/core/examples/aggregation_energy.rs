//! Aggregation run with its energy and entropy ledger.

use pme_lab::diagnostics::check_energy_dissipation;
use pme_lab::dynamics::{solve_aggregation_grid, SolverConfig};
use pme_lab::grid::{FieldKind, GridField};
use pme_lab::kernels::{matern_kernel, realize_on_torus};
use pme_lab::PeriodicGrid;
use std::f64::consts::PI;

fn main() -> pme_lab::Result<()> {
    let grid = PeriodicGrid::new(1, 1024)?;
    let u0 = GridField::from_fn(grid, FieldKind::Density, |x| {
        1.0 + 0.5 * (2.0 * PI * x[0]).sin()
    })?;
    let kernel = realize_on_torus(&matern_kernel(2.0, 1)?, 0.1, &grid)?;
    let traj = solve_aggregation_grid(&u0, &kernel, &SolverConfig::equispaced(0.5, 11)?)?;
    let ledger = check_energy_dissipation(&traj, &kernel)?;
    print!("{}", ledger.to_csv());
    println!("{}", serde_json::to_string_pretty(&ledger.summary())?);
    Ok(())
}
