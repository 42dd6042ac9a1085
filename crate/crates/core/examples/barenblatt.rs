//! Porous medium reference solver against the self-similar profile.

use pme_lab::dynamics::{solve_pme_reference, Barenblatt, SolverConfig};
use pme_lab::PeriodicGrid;

fn main() -> pme_lab::Result<()> {
    let b = Barenblatt::from_mass(0.015, 0.5)?;
    println!(
        "C = {:.6}, residual at (0.55, 0.7): {:.2e}",
        b.c,
        b.residual(0.55, 0.7, 1e-4)
    );
    for n in [256, 512, 1024] {
        let grid = PeriodicGrid::new(1, n)?;
        let traj = solve_pme_reference(&b.field(&grid, 0.25)?, &SolverConfig::equispaced(1.0, 5)?)?;
        let worst = traj
            .times
            .iter()
            .zip(traj.fields())
            .map(|(&t, f)| {
                let exact = b.field(&grid, 0.25 + t).expect("support inside the torus");
                f.values()
                    .iter()
                    .zip(exact.values())
                    .map(|(a, e)| (a - e).abs())
                    .sum::<f64>()
                    * grid.spacing()
            })
            .fold(0.0, f64::max);
        println!("n = {n:>4}: max L1 error {worst:.3e}");
    }
    Ok(())
}
