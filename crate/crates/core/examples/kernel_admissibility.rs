//! Admissibility checks for the Matérn and Laplace mollifiers.

use pme_lab::kernels::{laplace_kernel_1d, matern_kernel, validate_admissibility, EtaRule};
use pme_lab::PeriodicGrid;

fn main() -> pme_lab::Result<()> {
    let eps = [0.1, 0.05, 0.025];
    for (spec, grid) in [
        (matern_kernel(2.0, 1)?, PeriodicGrid::new(1, 512)?),
        (matern_kernel(3.0, 2)?, PeriodicGrid::new(2, 256)?),
        (laplace_kernel_1d(), PeriodicGrid::new(1, 512)?),
    ] {
        let report = validate_admissibility(&spec, &grid, &eps, EtaRule::default());
        println!("{} in d = {}:", report.family, report.dim);
        for (name, ok) in report.passed.as_rows() {
            println!("  {name:<22} {}", if ok { "ok" } else { "FAILED" });
        }
        println!(
            "  envelope fit: alpha {:.3}, a {:.3}, b {:.3}",
            report.alpha_hat, report.a_hat, report.b_hat
        );
        for c in &report.caveats {
            println!("  note: {c}");
        }
    }
    Ok(())
}
