//! Snapshot files: a node table, a cell table and a JSON sidecar.
//!
//! Floats are written in the shortest form that parses back to the same
//! binary value, so a layer read from disk is bit-identical to the one
//! written.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{MassMesh, MeshError};
use crate::state::{CellField, Geometry, GridLayer, NodeField, StateError};

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: bad header, expected `{expected}`")]
    Header { path: PathBuf, expected: &'static str },
    #[error("{path}: row {row}: {msg}")]
    Row { path: PathBuf, row: usize, msg: String },
    #[error("cell table does not match node table: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    State(#[from] StateError),
}

pub const NODE_HEADER: [&str; 4] = ["i", "s", "r", "u"];
pub const CELL_HEADER: [&str; 5] = ["i", "s_mid", "rho", "p", "eps"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub step: u64,
    pub t: f64,
    pub n: Geometry,
    pub gamma: f64,
    pub cells: usize,
    /// Step length that produced this layer (absent for the initial layer).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotPaths {
    pub nodes: PathBuf,
    pub cells: PathBuf,
    pub meta: PathBuf,
}

impl SnapshotPaths {
    /// `<prefix>_nodes.csv`, `<prefix>_cells.csv`, `<prefix>_meta.json`.
    pub fn from_prefix(prefix: impl AsRef<Path>) -> Self {
        let p = prefix.as_ref().as_os_str().to_string_lossy().into_owned();
        Self {
            nodes: PathBuf::from(format!("{p}_nodes.csv")),
            cells: PathBuf::from(format!("{p}_cells.csv")),
            meta: PathBuf::from(format!("{p}_meta.json")),
        }
    }

    /// From an explicit node/cell pair; the sidecar is looked for next to the node table.
    pub fn from_pair(nodes: impl Into<PathBuf>, cells: impl Into<PathBuf>) -> Self {
        let nodes = nodes.into();
        let name = nodes.to_string_lossy();
        let meta = match name.strip_suffix("_nodes.csv") {
            Some(stem) => PathBuf::from(format!("{stem}_meta.json")),
            None => nodes.with_extension("json"),
        };
        Self {
            nodes,
            cells: cells.into(),
            meta,
        }
    }
}

/// `snap_000012_t1.234560e-2`: step number and time in the name.
pub fn snapshot_prefix(dir: &Path, step: u64, t: f64) -> PathBuf {
    dir.join(format!("snap_{step:06}_t{t:.6e}"))
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> SnapshotError + '_ {
    move |source| SnapshotError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_snapshot(
    dir: &Path,
    step: u64,
    layer: &GridLayer,
    gamma: f64,
    tau: Option<f64>,
) -> Result<SnapshotPaths, SnapshotError> {
    fs::create_dir_all(dir).map_err(|source| SnapshotError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let paths = SnapshotPaths::from_prefix(snapshot_prefix(dir, step, layer.t));
    write_tables(&paths, layer)?;
    let meta = SnapshotMeta {
        step,
        t: layer.t,
        n: layer.geometry(),
        gamma,
        cells: layer.cells(),
        tau,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|source| SnapshotError::Json {
        path: paths.meta.clone(),
        source,
    })?;
    fs::write(&paths.meta, json + "\n").map_err(|source| SnapshotError::Io {
        path: paths.meta.clone(),
        source,
    })?;
    Ok(paths)
}

pub fn write_tables(paths: &SnapshotPaths, layer: &GridLayer) -> Result<(), SnapshotError> {
    let mesh = layer.mesh();
    let mut w = csv::Writer::from_path(&paths.nodes).map_err(csv_err(&paths.nodes))?;
    w.write_record(NODE_HEADER).map_err(csv_err(&paths.nodes))?;
    for i in 0..mesh.node_count() {
        w.write_record([i.to_string(), fmt(mesh.nodes()[i]), fmt(layer.r[i]), fmt(layer.u[i])])
            .map_err(csv_err(&paths.nodes))?;
    }
    w.flush().map_err(|source| SnapshotError::Io {
        path: paths.nodes.clone(),
        source,
    })?;

    let mut w = csv::Writer::from_path(&paths.cells).map_err(csv_err(&paths.cells))?;
    w.write_record(CELL_HEADER).map_err(csv_err(&paths.cells))?;
    for c in 0..mesh.cells() {
        w.write_record([
            c.to_string(),
            fmt(mesh.midpoint(c)),
            fmt(layer.rho[c]),
            fmt(layer.p[c]),
            fmt(layer.eps[c]),
        ])
        .map_err(csv_err(&paths.cells))?;
    }
    w.flush().map_err(|source| SnapshotError::Io {
        path: paths.cells.clone(),
        source,
    })
}

fn read_table(path: &Path, header: &'static [&'static str]) -> Result<Vec<Vec<f64>>, SnapshotError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let got = r.headers().map_err(csv_err(path))?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(SnapshotError::Header {
            path: path.to_path_buf(),
            expected: match header.len() {
                4 => "i,s,r,u",
                _ => "i,s_mid,rho,p,eps",
            },
        });
    }
    let mut rows = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let bad = |msg: String| SnapshotError::Row {
            path: path.to_path_buf(),
            row,
            msg,
        };
        let index: usize = rec[0].trim().parse().map_err(|e| bad(format!("index: {e}")))?;
        if index != row {
            return Err(bad(format!("index {index} out of order")));
        }
        let vals = rec
            .iter()
            .skip(1)
            .map(|v| v.trim().parse::<f64>().map_err(|e| bad(format!("`{v}`: {e}"))))
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(vals);
    }
    Ok(rows)
}

pub fn read_meta(path: &Path) -> Result<SnapshotMeta, SnapshotError> {
    let text = fs::read_to_string(path).map_err(|source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| SnapshotError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Rebuilds a layer (and its mesh) from the two tables.
pub fn read_layer(paths: &SnapshotPaths, geometry: Geometry, t: f64) -> Result<GridLayer, SnapshotError> {
    let nodes = read_table(&paths.nodes, &NODE_HEADER)?;
    let cells = read_table(&paths.cells, &CELL_HEADER)?;
    if cells.len() + 1 != nodes.len() {
        return Err(SnapshotError::Mismatch(format!(
            "{} nodes but {} cells",
            nodes.len(),
            cells.len()
        )));
    }
    let mesh = MassMesh::new(nodes.iter().map(|r| r[0]).collect())?;
    for (c, row) in cells.iter().enumerate() {
        if row[0] != mesh.midpoint(c) {
            return Err(SnapshotError::Mismatch(format!("midpoint of cell {c}")));
        }
    }
    let col = |rows: &[Vec<f64>], k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    Ok(GridLayer::new(
        Arc::new(mesh),
        geometry,
        t,
        NodeField::new(col(&nodes, 1)),
        NodeField::new(col(&nodes, 2)),
        CellField::new(col(&cells, 1)),
        CellField::new(col(&cells, 2)),
        CellField::new(col(&cells, 3)),
    )?)
}

/// Reads tables and sidecar together.
pub fn read_snapshot(paths: &SnapshotPaths) -> Result<(GridLayer, SnapshotMeta), SnapshotError> {
    let meta = read_meta(&paths.meta)?;
    let layer = read_layer(paths, meta.n, meta.t)?;
    if layer.cells() != meta.cells {
        return Err(SnapshotError::Mismatch(format!(
            "sidecar says {} cells, tables have {}",
            meta.cells,
            layer.cells()
        )));
    }
    Ok((layer, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setup::{make_initial_layer, Problem};

    fn sample() -> GridLayer {
        let (prof, _) = Problem::SmoothPulse {
            cells: 12,
            length: 1.0,
            amplitude: 0.1,
            pressure_amplitude: 0.1,
            center: 0.5,
            half_width: 0.25,
        }
        .build(Geometry::Spherical);
        let mut layer = make_initial_layer(&prof, Geometry::Spherical).unwrap();
        layer.t = 0.1 + 0.2;
        layer.u.as_mut_slice()[3] = 1e-300;
        layer
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let layer = sample();
        let paths = write_snapshot(dir.path(), 7, &layer, 5.0 / 3.0, Some(0.01)).unwrap();
        assert!(paths
            .nodes
            .file_name()
            .unwrap()
            .to_string_lossy()
            .starts_with("snap_000007_t3.000000e-1"));
        let (back, meta) = read_snapshot(&paths).unwrap();
        assert_eq!(meta.step, 7);
        assert_eq!(meta.tau, Some(0.01));
        assert_eq!(meta.t.to_bits(), layer.t.to_bits());
        assert_eq!(back.mesh(), layer.mesh());
        for (a, b) in [(&back.r, &layer.r), (&back.u, &layer.u)] {
            assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        for (a, b) in [(&back.rho, &layer.rho), (&back.p, &layer.p), (&back.eps, &layer.eps)] {
            assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn pair_paths_find_sidecar() {
        let p = SnapshotPaths::from_pair("out/snap_000001_t1e0_nodes.csv", "out/snap_000001_t1e0_cells.csv");
        assert_eq!(p.meta, PathBuf::from("out/snap_000001_t1e0_meta.json"));
        assert_eq!(p, SnapshotPaths::from_prefix("out/snap_000001_t1e0"));
    }

    #[test]
    fn malformed_tables_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_snapshot(dir.path(), 0, &sample(), 5.0 / 3.0, None).unwrap();
        let text = fs::read_to_string(&paths.cells).unwrap();
        fs::write(&paths.cells, text.replacen("rho", "density", 1)).unwrap();
        assert!(matches!(read_snapshot(&paths), Err(SnapshotError::Header { .. })));

        let paths = write_snapshot(dir.path(), 1, &sample(), 5.0 / 3.0, None).unwrap();
        let text = fs::read_to_string(&paths.cells).unwrap();
        let truncated: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        fs::write(&paths.cells, truncated).unwrap();
        assert!(matches!(read_snapshot(&paths), Err(SnapshotError::Mismatch(_))));
    }
}
