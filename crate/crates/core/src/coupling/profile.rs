//! Field magnitude along a curve just inside the beam contour.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdtd::MaterialGrid;
use crate::geom::Point2;
use crate::geometry_csv::fmt_f64;
use crate::lens::LensGeometry;

pub const HEADER: &str = "arclen_m,magnitude";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationProfile {
    /// Distance along the curve from the port-1 end (m).
    pub arclen: Vec<f64>,
    /// Field magnitude scaled to a unit maximum.
    pub magnitude: Vec<f64>,
}

impl ObservationProfile {
    pub fn len(&self) -> usize {
        self.arclen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arclen.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.arclen.last().copied().unwrap_or(0.0)
    }

    /// Largest difference between the profile and its reverse.
    pub fn asymmetry(&self) -> f64 {
        let n = self.magnitude.len();
        (0..n)
            .map(|i| (self.magnitude[i] - self.magnitude[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }

    /// Indices of maxima at least `min_height` of the global maximum that rise by at least
    /// `min_prominence` of their own height above the surrounding valleys.
    pub fn dominant_maxima(&self, min_height: f64, min_prominence: f64) -> Vec<usize> {
        dominant_maxima(&self.magnitude, min_height, min_prominence)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from(HEADER);
        s.push('\n');
        for (a, m) in self.arclen.iter().zip(&self.magnitude) {
            s.push_str(&format!("{},{}\n", fmt_f64(*a), fmt_f64(*m)));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// Sample `|field|` on a circle `offset` inside the beam arc, from its port-1 end to its
/// last-port end, at no more than half a cell spacing.
pub fn observation_profile(
    field: &[Complex64],
    grid: &MaterialGrid,
    geometry: &LensGeometry,
    offset: f64,
) -> Result<ObservationProfile> {
    if field.len() != grid.len() {
        return Err(Error::Invalid(format!(
            "field has {} values, grid has {}",
            field.len(),
            grid.len()
        )));
    }
    let arc = geometry.beam_arc;
    let radius = arc.radius - offset;
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("offset {offset} exceeds the arc radius")));
    }
    // angle about the arc centre, zero on the axis, positive toward +y
    let angle = |p: Point2| (p.y - arc.center.y).atan2(arc.center.x - p.x);
    let a0 = angle(arc.point_at(geometry.arc_span.0));
    let a1 = angle(arc.point_at(geometry.arc_span.1));
    let length = radius * (a1 - a0);
    let n = ((length / (0.5 * grid.dx)).ceil() as usize).max(2) + 1;
    let mut arclen = Vec::with_capacity(n);
    let mut mag = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 / (n - 1) as f64;
        let a = a0 + (a1 - a0) * t;
        let p = Point2::new(arc.center.x - radius * a.cos(), arc.center.y + radius * a.sin());
        let v = bilinear(field, grid, p).ok_or_else(|| {
            Error::Domain(format!(
                "observation curve leaves the grid at ({:.4e}, {:.4e})",
                p.x, p.y
            ))
        })?;
        arclen.push(length * t);
        mag.push(v.norm());
    }
    let max = mag.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        mag.iter_mut().for_each(|m| *m /= max);
    }
    Ok(ObservationProfile {
        arclen,
        magnitude: mag,
    })
}

fn bilinear(field: &[Complex64], grid: &MaterialGrid, p: Point2) -> Option<Complex64> {
    let (gx, gy) = grid.to_grid(p);
    if !(gx >= 0.0 && gy >= 0.0) {
        return None;
    }
    let (i, j) = (gx.floor() as usize, gy.floor() as usize);
    if i + 1 >= grid.nx || j + 1 >= grid.ny {
        return None;
    }
    let (fx, fy) = (gx - i as f64, gy - j as f64);
    let at = |i, j| field[grid.index(i, j)];
    Some(
        at(i, j) * (1.0 - fx) * (1.0 - fy)
            + at(i + 1, j) * fx * (1.0 - fy)
            + at(i, j + 1) * (1.0 - fx) * fy
            + at(i + 1, j + 1) * fx * fy,
    )
}

/// See [`ObservationProfile::dominant_maxima`].
pub fn dominant_maxima(values: &[f64], min_height: f64, min_prominence: f64) -> Vec<usize> {
    let max = values.iter().copied().fold(0.0, f64::max);
    let n = values.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        let v = values[i];
        if v > values[i - 1] && v >= values[i + 1] {
            // skip plateaus so each one counts once
            let mut k = i;
            while k + 1 < n && values[k + 1] == v {
                k += 1;
            }
            if k + 1 < n && values[k + 1] < v && v >= min_height * max {
                let left = valley(values[..i].iter().rev(), v);
                let right = valley(values[k + 1..].iter(), v);
                if v - left.max(right) >= min_prominence * v {
                    out.push(i);
                }
            }
            i = k + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Lowest value reached before the sequence climbs above `peak`.
fn valley<'a>(seq: impl Iterator<Item = &'a f64>, peak: f64) -> f64 {
    let mut low = peak;
    for &v in seq {
        if v > peak {
            break;
        }
        low = low.min(v);
    }
    low
}
