//! Spectral inequalities between kernel scales on random trial fields.

use pme_lab::diagnostics::{check_lemma_intermediate1, check_lemma_intermediate2};
use pme_lab::kernels::matern_kernel;
use pme_lab::PeriodicGrid;

fn main() -> pme_lab::Result<()> {
    let spec = matern_kernel(2.0, 1)?;
    let grid = PeriodicGrid::new(1, 1024)?;
    for (eps, eta) in [(0.1, 0.05), (0.05, 0.025)] {
        let r = check_lemma_intermediate1(&spec, eps, eta, &grid, 20, 1)?;
        println!(
            "eps {eps}, eta {eta}: max ratio {:.4} <= C = {:.4}: {}",
            r.max_ratio, r.constant, r.passed
        );
    }
    let r = check_lemma_intermediate2(&spec, &[0.2, 0.1, 0.05], &grid, 20, 2)?;
    println!(
        "sqrt-kernel gradient constants {:?}, spread {:.3}",
        r.max_ratios, r.spread
    );
    Ok(())
}
