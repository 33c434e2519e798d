//! ASCII OBJ export of reconstructed surfaces.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::grid::Grid;

/// OBJ text: one `v` line per node (first three coordinates, zero padded) and
/// one quad `f` line per grid cell, 1-based, LF line endings.
pub fn obj_string(positions: &[Vec<f64>], grid: &Grid) -> String {
    assert_eq!(grid.dim(), 2, "meshes need a two-dimensional grid");
    assert_eq!(positions.len(), grid.len());
    let mut out = String::new();
    for x in positions {
        let c = |i: usize| x.get(i).copied().unwrap_or(0.0);
        writeln!(out, "v {:.17e} {:.17e} {:.17e}", c(0), c(1), c(2)).expect("write to string");
    }
    for c0 in grid.plaquettes(0, 1) {
        let c1 = grid.neighbor(c0, 0, 1).expect("corner");
        let c2 = grid.neighbor(c1, 1, 1).expect("corner");
        let c3 = grid.neighbor(c0, 1, 1).expect("corner");
        writeln!(out, "f {} {} {} {}", c0 + 1, c1 + 1, c2 + 1, c3 + 1).expect("write to string");
    }
    out
}

#[derive(Serialize)]
struct Sidecar<'a> {
    dimension: usize,
    resolution: &'a [usize],
    positions: &'a [Vec<f64>],
}

/// Writes the OBJ file, plus `<path>.json` with full coordinates when the
/// ambient dimension exceeds three. Returns the sidecar path if one was written.
pub fn write_obj(path: &Path, positions: &[Vec<f64>], grid: &Grid) -> io::Result<Option<std::path::PathBuf>> {
    std::fs::write(path, obj_string(positions, grid))?;
    let dimension = positions.first().map_or(0, Vec::len);
    if dimension <= 3 {
        return Ok(None);
    }
    let mut side = path.as_os_str().to_owned();
    side.push(".json");
    let side = std::path::PathBuf::from(side);
    let body = serde_json::to_string_pretty(&Sidecar { dimension, resolution: &grid.counts, positions })
        .map_err(io::Error::other)?;
    std::fs::write(&side, body + "\n")?;
    Ok(Some(side))
}
