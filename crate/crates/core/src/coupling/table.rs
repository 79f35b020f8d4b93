//! Coupling vectors indexed by DoA, with interpolation and CSV storage.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::doa::CouplingVector;
use super::experiment::LensModel;
use crate::error::{Error, Result};
use crate::geometry_csv::fmt_f64;

pub const HEADER: &str = "theta_deg,port,kind,re,im";

/// Beam rows hold power waves over the square root of the injected power.
pub const TRANSMISSION: &str = "transmission";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    /// Cells per guided wavelength.
    pub resolution: f64,
    pub eps_eff: f64,
    pub freq: f64,
    pub normalization: String,
    pub n_beam: usize,
    pub n_array: usize,
}

impl TableMeta {
    pub fn from_model(model: &LensModel) -> Self {
        TableMeta {
            resolution: model.cfg.resolution,
            eps_eff: model.geometry.eps_eff,
            freq: model.geometry.freq,
            normalization: TRANSMISSION.into(),
            n_beam: model.geometry.n_beam(),
            n_array: model.geometry.n_array(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTable {
    /// Strictly increasing DoAs (rad).
    pub doa_grid: Vec<f64>,
    pub vectors: Vec<CouplingVector>,
    pub meta: TableMeta,
}

impl CouplingTable {
    pub fn new(doa_grid: Vec<f64>, vectors: Vec<CouplingVector>, meta: TableMeta) -> Result<Self> {
        if doa_grid.is_empty() {
            return Err(Error::Invalid("empty coupling table".into()));
        }
        if doa_grid.len() != vectors.len() {
            return Err(Error::Invalid(format!(
                "{} angles but {} vectors",
                doa_grid.len(),
                vectors.len()
            )));
        }
        if doa_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("DoA grid must be strictly increasing".into()));
        }
        let nb = vectors[0].n_beam();
        if vectors.iter().any(|v| v.n_beam() != nb) {
            return Err(Error::Invalid("vectors differ in beam port count".into()));
        }
        Ok(CouplingTable {
            doa_grid,
            vectors,
            meta,
        })
    }

    pub fn n_beam(&self) -> usize {
        self.vectors[0].n_beam()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.doa_grid[0], *self.doa_grid.last().unwrap())
    }

    /// Entry at exactly `theta`, if on the grid.
    pub fn lookup(&self, theta: f64) -> Option<&CouplingVector> {
        self.doa_grid
            .iter()
            .position(|t| *t == theta)
            .map(|i| &self.vectors[i])
    }

    /// Per-port complex linear interpolation of the absolute amplitudes between the
    /// bracketing entries.
    ///
    /// The result is not renormalized: its scale is the blend of the neighbouring scales and
    /// the metrics come from the blended amplitudes.
    pub fn interpolate(&self, theta: f64) -> Result<CouplingVector> {
        let (lo, hi) = self.range();
        if !(theta >= lo && theta <= hi) {
            return Err(Error::Domain(format!(
                "DoA {:.4} deg outside table range [{:.4}, {:.4}] deg",
                theta.to_degrees(),
                lo.to_degrees(),
                hi.to_degrees()
            )));
        }
        if let Some(v) = self.lookup(theta) {
            return Ok(v.clone());
        }
        let i = self.doa_grid.partition_point(|t| *t < theta);
        let (a, b) = (&self.vectors[i - 1], &self.vectors[i]);
        let t = (theta - self.doa_grid[i - 1]) / (self.doa_grid[i] - self.doa_grid[i - 1]);
        let mix = |x: &[Complex64], y: &[Complex64]| -> Vec<Complex64> {
            x.iter().zip(y).map(|(p, q)| p * (1.0 - t) + q * t).collect()
        };
        let scale = a.transmission_scale * (1.0 - t) + b.transmission_scale * t;
        let beam = mix(&a.transmission(), &b.transmission());
        let beam = if scale > 0.0 {
            beam.into_iter().map(|x| x / scale).collect()
        } else {
            beam
        };
        Ok(
            CouplingVector::from_parts(theta, beam, mix(&a.array_reflections, &b.array_reflections))
                .with_scale(scale),
        )
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from(HEADER);
        s.push('\n');
        for v in &self.vectors {
            let deg = fmt_f64(v.doa.to_degrees());
            let beam = v.transmission();
            let rows = beam
                .iter()
                .map(|a| ("beam", a))
                .chain(v.array_reflections.iter().map(|a| ("array", a)));
            for (port, (kind, a)) in rows.enumerate() {
                s.push_str(&format!(
                    "{deg},{},{kind},{},{}\n",
                    port + 1,
                    fmt_f64(a.re),
                    fmt_f64(a.im)
                ));
            }
        }
        s
    }

    /// Writes `path` and a `.json` metadata sidecar next to it.
    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))?;
        let side = sidecar_path(path);
        let meta = serde_json::to_string_pretty(&self.meta).expect("metadata serializes");
        fs::write(&side, meta).map_err(|e| Error::io(&side, e))
    }

    /// Reads a table written by [`write`](Self::write); the sidecar is optional.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let side = sidecar_path(path);
        let meta = match fs::read_to_string(&side) {
            Ok(s) => Some(serde_json::from_str::<TableMeta>(&s).map_err(|e| Error::Parse {
                path: side.clone(),
                line: e.line(),
                msg: e.to_string(),
            })?),
            Err(_) => None,
        };
        Self::parse(&text, path, meta)
    }

    pub fn parse(text: &str, path: &Path, meta: Option<TableMeta>) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == HEADER => {}
            _ => return Err(perr(1, format!("expected header {HEADER:?}"))),
        }
        // (theta_deg, beam, array) in file order
        let mut groups: Vec<(f64, Vec<Complex64>, Vec<Complex64>)> = Vec::new();
        for (n, line) in lines {
            let line_no = n + 1;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(perr(line_no, format!("expected 5 fields, got {}", f.len())));
            }
            let num = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| perr(line_no, format!("bad number {s:?}: {e}")))
            };
            let theta = num(f[0])?;
            let a = Complex64::new(num(f[3])?, num(f[4])?);
            if groups.last().map(|g| g.0) != Some(theta) {
                groups.push((theta, Vec::new(), Vec::new()));
            }
            let g = groups.last_mut().unwrap();
            match f[2].trim() {
                "beam" => g.1.push(a),
                "array" => g.2.push(a),
                other => return Err(perr(line_no, format!("unknown kind {other:?}"))),
            }
        }
        if groups.is_empty() {
            return Err(perr(2, "no rows".into()));
        }
        let grid: Vec<f64> = groups.iter().map(|g| g.0.to_radians()).collect();
        let vectors: Vec<CouplingVector> = groups
            .into_iter()
            .zip(&grid)
            .map(|((_, beam, arr), th)| {
                let scale = beam.iter().map(|a| a.norm()).fold(0.0, f64::max);
                CouplingVector::normalized(*th, beam, arr).with_scale(scale)
            })
            .collect();
        let meta = meta.unwrap_or_else(|| TableMeta {
            resolution: f64::NAN,
            eps_eff: f64::NAN,
            freq: f64::NAN,
            normalization: TRANSMISSION.into(),
            n_beam: vectors[0].n_beam(),
            n_array: vectors[0].array_reflections.len(),
        });
        Self::new(grid, vectors, meta)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// CSV of a single vector, in the table format.
pub fn write_vector_csv(v: &CouplingVector, path: &Path) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let meta = TableMeta {
        resolution: f64::NAN,
        eps_eff: f64::NAN,
        freq: f64::NAN,
        normalization: String::new(),
        n_beam: v.n_beam(),
        n_array: v.array_reflections.len(),
    };
    let t = CouplingTable {
        doa_grid: vec![v.doa],
        vectors: vec![v.clone()],
        meta,
    };
    w.write_all(t.to_csv_string().as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> TableMeta {
        TableMeta {
            resolution: 20.0,
            eps_eff: 6.15,
            freq: 28e9,
            normalization: TRANSMISSION.into(),
            n_beam: 3,
            n_array: 2,
        }
    }

    fn one_hot(theta: f64, port: usize, phase: f64) -> CouplingVector {
        let mut b = vec![Complex64::new(0.0, 0.0); 3];
        b[port] = Complex64::from_polar(1.0, phase);
        CouplingVector::from_parts(theta, b, vec![Complex64::new(0.1, -0.2); 2]).with_scale(0.5 + theta)
    }

    fn table() -> CouplingTable {
        CouplingTable::new(
            vec![-0.2, 0.0, 0.3],
            vec![one_hot(-0.2, 0, 0.0), one_hot(0.0, 1, 0.4), one_hot(0.3, 1, -0.3)],
            meta(),
        )
        .unwrap()
    }

    #[test]
    fn grid_angle_returns_entry() {
        let t = table();
        for (th, v) in t.doa_grid.iter().zip(&t.vectors) {
            assert_eq!(&t.interpolate(*th).unwrap(), v);
        }
    }

    #[test]
    fn midpoint_is_mean_of_neighbours() {
        let t = table();
        let v = t.interpolate(-0.1).unwrap();
        let (a, b, got) = (t.vectors[0].transmission(), t.vectors[1].transmission(), v.transmission());
        for p in 0..3 {
            assert!((got[p] - (a[p] + b[p]) / 2.0).norm() < 1e-15);
        }
        assert!((v.transmission_scale - 0.4).abs() < 1e-15);
    }

    #[test]
    fn one_hot_on_same_port_stays_one_hot() {
        let v = table().interpolate(0.15).unwrap();
        assert_eq!(v.peak_port, 2);
        assert_eq!(v.beam_amplitudes[0].norm(), 0.0);
        assert_eq!(v.beam_amplitudes[2].norm(), 0.0);
        assert!((v.focus_fraction - 1.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(table().interpolate(0.31).is_err());
        assert!(table().interpolate(f64::NAN).is_err());
    }

    #[test]
    fn unsorted_grid_rejected() {
        let v = one_hot(0.0, 0, 0.0);
        assert!(CouplingTable::new(vec![0.1, 0.1], vec![v.clone(), v], meta()).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("table.csv");
        let t = table();
        t.write(&p).unwrap();
        let back = CouplingTable::read(&p).unwrap();
        assert_eq!(back.meta, t.meta);
        for (a, b) in back.vectors.iter().zip(&t.vectors) {
            for (x, y) in a.transmission().iter().zip(b.transmission()) {
                assert!((x - y).norm() <= 1e-15 * y.norm().max(1.0));
            }
            assert!((a.transmission_scale - b.transmission_scale).abs() < 1e-15);
            assert_eq!(a.peak_port, b.peak_port);
            assert_eq!(a.array_reflections, b.array_reflections);
            assert!((a.doa - b.doa).abs() < 1e-15);
        }
    }

    #[test]
    fn bad_header_is_parse_error() {
        let e = CouplingTable::parse("a,b\n", Path::new("x.csv"), None).unwrap_err();
        assert!(e.is_config_error());
    }
}
