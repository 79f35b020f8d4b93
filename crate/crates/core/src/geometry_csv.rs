//! Geometry CSV: `kind,index,x_m,y_m,w_m,angle_rad`.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lens::{DummySide, LensGeometry};

pub const HEADER: &str = "kind,index,x_m,y_m,w_m,angle_rad";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Beam,
    Array,
    Aperture,
    DummyA,
    DummyB,
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowKind::Beam => "beam",
            RowKind::Array => "array",
            RowKind::Aperture => "aperture",
            RowKind::DummyA => "dummy_a",
            RowKind::DummyB => "dummy_b",
        })
    }
}

impl FromStr for RowKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "beam" => RowKind::Beam,
            "array" => RowKind::Array,
            "aperture" => RowKind::Aperture,
            "dummy_a" => RowKind::DummyA,
            "dummy_b" => RowKind::DummyB,
            other => return Err(format!("unknown row kind {other:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryRow {
    pub kind: RowKind,
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub angle: f64,
}

/// Flat row view of a [`LensGeometry`], as stored on disk.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeometryTable {
    pub rows: Vec<GeometryRow>,
}

/// 17 significant digits: enough for every f64 to survive a text round trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl GeometryTable {
    pub fn from_geometry(g: &LensGeometry) -> Self {
        let mut rows = Vec::new();
        for (i, b) in g.beam_ports.iter().enumerate() {
            rows.push(GeometryRow {
                kind: RowKind::Beam,
                index: i,
                x: b.position.x,
                y: b.position.y,
                w: 0.0,
                angle: b.beam_angle,
            });
        }
        for (i, (p, w)) in g.array_contour.iter().zip(&g.line_lengths).enumerate() {
            rows.push(GeometryRow {
                kind: RowKind::Array,
                index: i,
                x: p.x,
                y: p.y,
                w: *w,
                angle: 0.0,
            });
        }
        for (i, y3) in g.aperture_positions.iter().enumerate() {
            rows.push(GeometryRow {
                kind: RowKind::Aperture,
                index: i,
                x: 0.0,
                y: *y3,
                w: 0.0,
                angle: 0.0,
            });
        }
        for side in [DummySide::A, DummySide::B] {
            let kind = match side {
                DummySide::A => RowKind::DummyA,
                DummySide::B => RowKind::DummyB,
            };
            let segs: Vec<_> = g.dummy_segments.iter().filter(|d| d.side == side).collect();
            if let Some(first) = segs.first() {
                let mut pts = vec![first.start];
                pts.extend(segs.iter().map(|d| d.end));
                for (i, p) in pts.iter().enumerate() {
                    rows.push(GeometryRow {
                        kind,
                        index: i,
                        x: p.x,
                        y: p.y,
                        w: 0.0,
                        angle: 0.0,
                    });
                }
            }
        }
        GeometryTable { rows }
    }

    pub fn count(&self, kind: RowKind) -> usize {
        self.rows.iter().filter(|r| r.kind == kind).count()
    }

    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.kind,
                r.index,
                fmt_f64(r.x),
                fmt_f64(r.y),
                fmt_f64(r.w),
                fmt_f64(r.angle)
            )?;
        }
        Ok(())
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == HEADER => {}
            _ => return Err(err(1, format!("expected header {HEADER:?}"))),
        }
        let mut rows = Vec::new();
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(err(n + 1, format!("expected 6 fields, got {}", f.len())));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| err(n + 1, e.to_string()));
            rows.push(GeometryRow {
                kind: f[0].parse().map_err(|e| err(n + 1, e))?,
                index: f[1].trim().parse().map_err(|e: std::num::ParseIntError| err(n + 1, e.to_string()))?,
                x: num(f[2])?,
                y: num(f[3])?,
                w: num(f[4])?,
                angle: num(f[5])?,
            });
        }
        Ok(GeometryTable { rows })
    }
}

pub fn export_table(table: &GeometryTable, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    table
        .write_to(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn export_geometry(geometry: &LensGeometry, path: &Path) -> Result<()> {
    export_table(&GeometryTable::from_geometry(geometry), path)
}

pub fn import_geometry(path: &Path) -> Result<GeometryTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    GeometryTable::parse(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lens::{synthesize, LensDesignParams, WavelengthConvention};

    #[test]
    fn counts_and_round_trip() {
        let g = synthesize(&LensDesignParams::reference_28ghz(WavelengthConvention::FreeSpace)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        export_geometry(&g, &a).unwrap();
        let t = import_geometry(&a).unwrap();
        assert_eq!(t.count(RowKind::Beam), 13);
        assert_eq!(t.count(RowKind::Array), 13);
        assert_eq!(t.count(RowKind::DummyA), 2);
        assert_eq!(t, GeometryTable::from_geometry(&g));
        export_table(&t, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn no_dummy_rows_without_dummies() {
        let mut p = LensDesignParams::reference_28ghz(WavelengthConvention::FreeSpace);
        p.n_dummy = 0;
        let t = GeometryTable::from_geometry(&synthesize(&p).unwrap());
        assert_eq!(t.count(RowKind::DummyA) + t.count(RowKind::DummyB), 0);
    }

    #[test]
    fn bad_input_reports_line() {
        let text = format!("{HEADER}\nbeam,0,1,2,3,4\nbeam,1,x,2,3,4\n");
        match GeometryTable::parse(&text, Path::new("g.csv")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_directory_surfaces_path() {
        let g = synthesize(&LensDesignParams::reference_28ghz(WavelengthConvention::FreeSpace)).unwrap();
        let err = export_geometry(&g, Path::new("/nonexistent/dir/g.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/g.csv"));
    }
}
