//! The terms D, C and G between the diffusion and aggregation solutions.

use pme_lab::diagnostics::{commutator_decomposition_1d, CommutatorLedger1D};
use pme_lab::dynamics::{solve_aggregation_grid, solve_pme_reference, SolverConfig};
use pme_lab::grid::{FieldKind, GridField};
use pme_lab::kernels::{laplace_kernel_1d, realize_on_torus};
use pme_lab::PeriodicGrid;
use std::f64::consts::PI;

fn main() -> pme_lab::Result<()> {
    let grid = PeriodicGrid::new(1, 1024)?;
    let u0 = GridField::from_fn(grid, FieldKind::Density, |x| {
        1.0 + 0.5 * (2.0 * PI * x[0]).sin()
    })?;
    let cfg = SolverConfig::equispaced(0.25, 6)?;
    let reference = solve_pme_reference(&u0, &cfg)?;
    for eps in [0.1, 0.05] {
        let kernel = realize_on_torus(&laplace_kernel_1d(), eps, &grid)?;
        let traj = solve_aggregation_grid(&u0, &kernel, &cfg)?;
        let entries = reference
            .fields()
            .into_iter()
            .zip(traj.fields())
            .zip(&traj.times)
            .map(|((u, ut), &t)| commutator_decomposition_1d(u, ut, &kernel, t))
            .collect::<pme_lab::Result<Vec<_>>>()?;
        let ledger = CommutatorLedger1D::from_entries(eps, entries);
        println!(
            "eps = {eps}: max G {:.2e}, max |C| {:.2e}",
            ledger.max_g, ledger.max_abs_c
        );
        print!("{}", ledger.to_csv());
    }
    Ok(())
}
