//! Exact Wasserstein-2 distance on the circle and the geodesic velocities.

use pme_lab::grid::{normalize_density, wrap_displacement, FieldKind, GridField};
use pme_lab::transport::w2_circle_1d;
use pme_lab::PeriodicGrid;

fn bump(grid: PeriodicGrid, center: f64, width: f64) -> pme_lab::Result<GridField> {
    let raw = GridField::from_fn(grid, FieldKind::Scalar, |x| {
        0.02 + (-(wrap_displacement(x[0] - center) / width).powi(2)).exp()
    })?;
    normalize_density(&raw)
}

fn main() -> pme_lab::Result<()> {
    let grid = PeriodicGrid::new(1, 512)?;
    let u = bump(grid, 0.1, 0.05)?;
    let v = bump(grid, 0.85, 0.08)?;
    let r = w2_circle_1d(&u, &v)?;
    println!(
        "W2 = {:.6} ({:?}, cut {:?})",
        r.distance, r.method, r.meta.cut
    );
    let geo = r.geodesic.expect("geodesic data");
    for j in (0..512).step_by(64) {
        println!(
            "x = {:.3}: T(x) = {:.4}, v0 = {:+.4}, v1 = {:+.4}",
            j as f64 / 512.0,
            geo.map[j],
            geo.v0[j],
            geo.v1[j]
        );
    }
    Ok(())
}
