//! Writing fields to disk and measuring distances between the files.

use pme_lab::field_io::{read_field, write_field};
use pme_lab::grid::{FieldKind, GridField};
use pme_lab::transport::w2_circle_1d;
use pme_lab::PeriodicGrid;
use std::f64::consts::PI;

fn main() -> pme_lab::Result<()> {
    let dir = std::env::temp_dir().join("pme_field_files");
    std::fs::create_dir_all(&dir)?;
    let grid = PeriodicGrid::new(1, 256)?;
    let a = GridField::from_fn(grid, FieldKind::Density, |x| {
        1.0 + 0.5 * (2.0 * PI * x[0]).sin()
    })?;
    let b = GridField::from_fn(grid, FieldKind::Density, |x| {
        1.0 + 0.5 * (2.0 * PI * x[0]).cos()
    })?;
    write_field(dir.join("a.bin"), &a)?;
    write_field(dir.join("b.csv"), &b)?;
    let (a2, b2) = (
        read_field(dir.join("a.bin"))?,
        read_field(dir.join("b.csv"))?,
    );
    assert_eq!(a, a2);
    println!("W2 = {:.6}", w2_circle_1d(&a2, &b2)?.distance);
    println!(
        "try: pme w2 {} {}",
        dir.join("a.bin").display(),
        dir.join("b.csv").display()
    );
    Ok(())
}
