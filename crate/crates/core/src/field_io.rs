//! Field snapshot files.
//!
//! Two layouts share one header, a single-line JSON object
//! `{"dim":1,"n":64,"kind":"density"}`:
//!
//! * binary (`.field`, any extension other than `.csv`): the header line
//!   terminated by `\n`, followed by `n^dim` little-endian `f64` values in
//!   row-major order (axis 0 slowest);
//! * CSV (`.csv`): the header line prefixed by `# `, then one value per line
//!   in the same order, printed with round-trip precision.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FieldKind, GridField, PeriodicGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub dim: usize,
    pub n: usize,
    pub kind: FieldKind,
}

impl FieldHeader {
    pub fn of(field: &GridField) -> Self {
        FieldHeader {
            dim: field.grid().dim(),
            n: field.grid().n(),
            kind: field.kind(),
        }
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false)
}

pub fn write_field(path: impl AsRef<Path>, field: &GridField) -> Result<()> {
    let path = path.as_ref();
    let header = serde_json::to_string(&FieldHeader::of(field))?;
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    if is_csv(path) {
        writeln!(out, "# {header}")?;
        for v in field.values() {
            writeln!(out, "{v:e}")?;
        }
    } else {
        writeln!(out, "{header}")?;
        for v in field.values() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<GridField> {
    let path = path.as_ref();
    let mut reader = BufReader::new(fs::File::open(path)?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let json = line.trim().trim_start_matches('#').trim();
    let header: FieldHeader = serde_json::from_str(json)?;
    let grid = PeriodicGrid::new(header.dim, header.n)?;
    let mut values = Vec::with_capacity(grid.len());
    if is_csv(path) {
        for row in reader.lines() {
            let row = row?;
            let row = row.trim();
            if row.is_empty() {
                continue;
            }
            let v: f64 = row
                .parse()
                .map_err(|e| Error::Format(format!("bad value {row:?}: {e}")))?;
            values.push(v);
        }
    } else {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        if bytes.len() != 8 * grid.len() {
            return Err(Error::Format(format!(
                "expected {} bytes of values, found {}",
                8 * grid.len(),
                bytes.len()
            )));
        }
        values.extend(
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap())),
        );
    }
    if values.len() != grid.len() {
        return Err(Error::Format(format!(
            "expected {} values, found {}",
            grid.len(),
            values.len()
        )));
    }
    match header.kind {
        FieldKind::Density => GridField::density(grid, values),
        kind => GridField::new(grid, values, kind),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn both_layouts_round_trip(values in prop::collection::vec(-1e6f64..1e6, 27), csv in any::<bool>()) {
            let grid = PeriodicGrid::new(3, 3).unwrap();
            let field = GridField::scalar(grid, values).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join(if csv { "f.csv" } else { "f.field" });
            write_field(&path, &field).unwrap();
            let back = read_field(&path).unwrap();
            prop_assert_eq!(back, field);
        }
    }

    #[test]
    fn truncated_binary_is_rejected() {
        let grid = PeriodicGrid::new(1, 4).unwrap();
        let field = GridField::uniform(grid);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.field");
        write_field(&path, &field).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(read_field(&path), Err(Error::Format(_))));
    }
}
