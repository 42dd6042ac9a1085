//! A small one-dimensional rate experiment written to `target/rate_study`.

use pme_lab::harness::{run_experiment, ExperimentConfig};

fn main() -> pme_lab::Result<()> {
    let cfg: ExperimentConfig = serde_json::from_str(
        r#"{
            "experiment": "rate1d",
            "dimension": 1,
            "n": 1024,
            "kernel": {"family": "laplace"},
            "epsilons": [0.2, 0.1, 0.05, 0.025],
            "horizon": 0.25,
            "referenceN": 512,
            "outputDir": "target/rate_study"
        }"#,
    )?;
    let outcome = run_experiment(&cfg)?;
    if let Some(report) = &outcome.report {
        for row in &report.rows {
            println!(
                "eps {:<6} W2 {:.4e}  L2 {:.4e}",
                row.epsilon,
                row.distance,
                row.l2_error.unwrap_or(f64::NAN)
            );
        }
        println!("slope {:?}, checks {:?}", report.slope(), outcome.checks);
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
