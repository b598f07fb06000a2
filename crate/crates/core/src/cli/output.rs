//! File emission: CSV with 17 significant digits and atomic replacement.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::{Boundary, Mesh};

/// Scientific notation with 17 significant digits; parses back bit-exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Domain(format!("{} has no file name", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let mut file = fs::File::create(&tmp)?;
    file.write_all(bytes)?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn csv_bytes<const K: usize>(header: [&str; K], rows: impl IntoIterator<Item = [f64; K]>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.map(fmt_f64)).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Numeric(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn boundary_csv(boundary: &Boundary) -> Result<Vec<u8>> {
    let rows = boundary.times().iter().zip(boundary.values()).map(|(&t, &b)| [t, b]);
    csv_bytes(["t", "b"], rows)
}

/// Reads a `t,b` file back into a boundary on the mesh its `t` column
/// spells out, re-pinned to `z`.
pub fn read_boundary_csv(path: &Path, z: f64) -> Result<Boundary> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "b"] {
        return Err(Error::Domain(format!("{}: expected header `t,b`", path.display())));
    }
    let (mut t, mut b) = (Vec::new(), Vec::new());
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let parse = |k: usize| -> Result<f64> {
            record.get(k).and_then(|s| s.trim().parse().ok()).ok_or_else(|| {
                Error::Domain(format!("{}: row {} column {k} is not a number", path.display(), row + 2))
            })
        };
        t.push(parse(0)?);
        b.push(parse(1)?);
    }
    Boundary::from_values(Mesh::custom(t)?, b, z)
}
