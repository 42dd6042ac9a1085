//! Exact transport between small atomic measures.

use pme_lab::transport::{lp_oracle, w2_circle_atomic, AtomicMeasure};

fn main() -> pme_lab::Result<()> {
    let a = AtomicMeasure::new(
        1,
        vec![[0.05, 0.0, 0.0], [0.4, 0.0, 0.0], [0.7, 0.0, 0.0]],
        vec![0.5, 0.3, 0.2],
    )?;
    let b = AtomicMeasure::new(1, vec![[0.9, 0.0, 0.0], [0.3, 0.0, 0.0]], vec![0.6, 0.4])?;
    let exact = lp_oracle(&a, &b)?;
    println!("oracle {:.10} via {:?}", exact.distance, exact.meta.solver);
    for (i, j, m) in exact.plan.unwrap_or_default() {
        println!("  {i} -> {j}: {m:.3}");
    }
    println!("circle {:.10}", w2_circle_atomic(&a, &b)?.distance);
    let sq = AtomicMeasure::uniform(2, vec![[0.1, 0.1, 0.0], [0.6, 0.2, 0.0], [0.3, 0.8, 0.0]])?;
    let tr = AtomicMeasure::uniform(2, vec![[0.9, 0.9, 0.0], [0.5, 0.5, 0.0], [0.2, 0.6, 0.0]])?;
    println!("2D assignment {:.10}", lp_oracle(&sq, &tr)?.distance);
    Ok(())
}
