//! Debiased Sinkhorn on product densities against the tensorised exact value.

use pme_lab::grid::{normalize_density, FieldKind, GridField};
use pme_lab::transport::{w2_circle_1d, w2_sinkhorn, SinkhornOptions};
use pme_lab::PeriodicGrid;
use std::f64::consts::PI;

fn main() -> pme_lab::Result<()> {
    let line = PeriodicGrid::new(1, 64)?;
    let u1 = normalize_density(&GridField::from_fn(line, FieldKind::Scalar, |x| {
        1.0 + 0.8 * (2.0 * PI * x[0]).sin()
    })?)?;
    let v1 = normalize_density(&GridField::from_fn(line, FieldKind::Scalar, |x| {
        1.0 + 0.8 * (2.0 * PI * x[0]).cos()
    })?)?;
    let plane = PeriodicGrid::new(2, 64)?;
    let tensor = |f: &GridField| {
        GridField::density(
            plane,
            (0..plane.len())
                .map(|k| f.values()[k / 64] * f.values()[k % 64])
                .collect(),
        )
    };
    let exact = 2f64.sqrt() * w2_circle_1d(&u1, &v1)?.distance;
    for reg in [2e-3, 1e-3, 5e-4] {
        let r = w2_sinkhorn(
            &tensor(&u1)?,
            &tensor(&v1)?,
            &SinkhornOptions::default().with_reg(reg),
        )?;
        println!(
            "reg {reg:.0e}: {:.6} vs exact {exact:.6} ({:+.2}%), {} iterations",
            r.distance,
            100.0 * (r.distance - exact) / exact,
            r.meta.iterations.unwrap_or(0)
        );
    }
    Ok(())
}
