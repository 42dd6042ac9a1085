use pme_lab::dynamics::{solve_pme_reference, Barenblatt, SolverConfig};
use pme_lab::grid::{mass, PeriodicGrid};

#[test]
fn barenblatt_profile_is_reproduced() {
    let grid = PeriodicGrid::new(1, 1024).unwrap();
    let b = Barenblatt::from_mass(0.015, 0.5).unwrap();
    let t0 = 0.25;
    let u0 = b.field(&grid, t0).unwrap();
    let cfg = SolverConfig::equispaced(1.0, 5).unwrap();
    let traj = solve_pme_reference(&u0, &cfg).unwrap();
    let h = grid.spacing();
    for (&tau, f) in traj.times.iter().zip(traj.fields()) {
        let exact = b.field(&grid, t0 + tau).unwrap();
        let l1: f64 = f
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, e)| (a - e).abs())
            .sum::<f64>()
            * h;
        assert!(l1 <= 1e-3, "t = {}: L1 error {l1}", t0 + tau);
        assert!((mass(f) - mass(&u0)).abs() < 1e-13);
    }
}
