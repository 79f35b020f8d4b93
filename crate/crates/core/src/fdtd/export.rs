//! Field snapshot and probe-series files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::grid::MaterialGrid;
use crate::error::{Error, Result};
use crate::geometry_csv::fmt_f64;

/// Sidecar describing a raw field dump.
#[derive(Debug, Clone, Serialize)]
pub struct SnapshotMeta {
    pub nx: usize,
    pub ny: usize,
    pub dx_m: f64,
    pub origin_x_m: f64,
    pub origin_y_m: f64,
    pub step: usize,
    pub time_s: f64,
    pub dtype: &'static str,
    /// Rows run along y, x varies fastest.
    pub order: &'static str,
    pub quantity: String,
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Write `values` (one per node) as little-endian f64 plus a `.json` sidecar next to it.
pub fn write_field_binary(
    grid: &MaterialGrid,
    values: &[f64],
    quantity: &str,
    step: usize,
    time_s: f64,
    path: &Path,
) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::Invalid(format!(
            "field has {} values for a {}x{} grid",
            values.len(),
            grid.nx,
            grid.ny
        )));
    }
    let mut out = create(path)?;
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))?;
    let meta = SnapshotMeta {
        nx: grid.nx,
        ny: grid.ny,
        dx_m: grid.dx,
        origin_x_m: grid.origin.x,
        origin_y_m: grid.origin.y,
        step,
        time_s,
        dtype: "f64le",
        order: "row_major_y_x",
        quantity: quantity.to_string(),
    };
    let side = path.with_extension("json");
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Invalid(e.to_string()))?;
    fs::write(&side, text).map_err(|e| Error::io(&side, e))
}

/// Downsampled CSV `x_m,y_m,ez`, keeping every `stride`-th node in each direction.
pub fn write_field_csv(grid: &MaterialGrid, values: &[f64], stride: usize, path: &Path) -> Result<()> {
    let stride = stride.max(1);
    let mut out = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "x_m,y_m,ez")?;
        for j in (0..grid.ny).step_by(stride) {
            for i in (0..grid.nx).step_by(stride) {
                let n = grid.index(i, j);
                let p = grid.node_position(n);
                writeln!(out, "{},{},{}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(values[n]))?;
            }
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Probe time series as `port,step,time_s,value`.
pub fn write_probe_csv(
    series: &[(usize, Vec<f64>)],
    first_step: usize,
    dt: f64,
    path: &Path,
) -> Result<()> {
    let mut out = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "port,step,time_s,value")?;
        for (port, values) in series {
            for (k, v) in values.iter().enumerate() {
                let step = first_step + k;
                writeln!(out, "{port},{step},{},{}", fmt_f64(step as f64 * dt), fmt_f64(*v))?;
            }
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
