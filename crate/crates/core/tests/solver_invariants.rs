use std::f64::consts::PI;

use proptest::prelude::*;

use pme_lab::dynamics::{solve_aggregation_grid, solve_pme_reference, SolverConfig};
use pme_lab::grid::{mass, FieldKind, GridField};
use pme_lab::kernels::{laplace_kernel, realize_on_torus};
use pme_lab::transport::w2_circle_1d;
use pme_lab::PeriodicGrid;

fn sine_density(grid: PeriodicGrid, a: f64, b: f64, phase: f64) -> GridField {
    GridField::from_fn(grid, FieldKind::Density, |x| {
        1.0 + a * (2.0 * PI * x[0] + phase).sin() + b * (4.0 * PI * x[0]).cos()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn solvers_conserve_mass_and_positivity(a in 0.0..0.5f64, b in 0.0..0.3f64, phase in 0.0..6.2f64) {
        let grid = PeriodicGrid::new(1, 128).unwrap();
        let u0 = sine_density(grid, a, b, phase);
        let cfg = SolverConfig::equispaced(0.05, 3).unwrap();
        let kernel = realize_on_torus(&laplace_kernel(1).unwrap(), 0.1, &grid).unwrap();
        for traj in [solve_aggregation_grid(&u0, &kernel, &cfg).unwrap(), solve_pme_reference(&u0, &cfg).unwrap()] {
            let last = traj.final_snapshot().field().unwrap();
            prop_assert!((mass(last) - 1.0).abs() < 1e-12);
            prop_assert!(last.min() >= 0.0);
        }
    }

    #[test]
    fn circle_distance_is_a_metric(a in 0.0..0.8f64, p in 0.0..6.2f64, q in 0.0..6.2f64) {
        let grid = PeriodicGrid::new(1, 256).unwrap();
        let (u, v, w) = (sine_density(grid, a, 0.0, p), sine_density(grid, a, 0.1, q), sine_density(grid, 0.3, 0.0, 0.0));
        let d = |x: &GridField, y: &GridField| w2_circle_1d(x, y).unwrap().distance;
        prop_assert!(d(&u, &u) < 1e-9);
        prop_assert!((d(&u, &v) - d(&v, &u)).abs() < 1e-9);
        prop_assert!(d(&u, &w) <= d(&u, &v) + d(&v, &w) + 1e-9);
        prop_assert!(d(&u, &v) <= 0.5);
    }
}

#[test]
fn uniform_density_is_stationary() {
    let grid = PeriodicGrid::new(1, 128).unwrap();
    let u0 = GridField::uniform(grid);
    let cfg = SolverConfig::equispaced(0.1, 2).unwrap();
    let kernel = realize_on_torus(&laplace_kernel(1).unwrap(), 0.05, &grid).unwrap();
    let agg = solve_aggregation_grid(&u0, &kernel, &cfg).unwrap();
    let pme = solve_pme_reference(&u0, &cfg).unwrap();
    for traj in [agg, pme] {
        let f = traj.final_snapshot().field().unwrap();
        let dev = f.difference(&u0).unwrap();
        assert!(dev.max().abs().max(dev.min().abs()) < 1e-10);
    }
}
