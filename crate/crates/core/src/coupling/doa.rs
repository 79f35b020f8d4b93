//! Receive-mode experiments: a plane wave from angle `theta` arriving at the array.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::{Excitation, LensModel, PortRun, PowerBalance};
use super::table::CouplingTable;
use crate::error::{Error, Result};
use crate::lens::LensGeometry;
use crate::material::{free_space_wavelength, C0};

/// Per-element drive of a plane wave from `theta` (rad, positive toward the last beam port).
pub fn phase_ramp(theta: f64, geometry: &LensGeometry) -> Result<Vec<Complex64>> {
    if !(theta.abs() <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::Domain(format!("DoA {theta} rad outside [-pi/2, pi/2]")));
    }
    let k0 = 2.0 * std::f64::consts::PI / free_space_wavelength(geometry.freq);
    Ok(geometry
        .aperture_positions
        .iter()
        .map(|y| Complex64::from_polar(1.0, -k0 * y * theta.sin()))
        .collect())
}

/// Unwrapped phases of the array-port drives: the plane-wave ramp delayed by each element's line.
pub fn array_drive_phases(theta: f64, geometry: &LensGeometry) -> Vec<f64> {
    let k0 = 2.0 * std::f64::consts::PI * geometry.freq / C0;
    let kg = k0 * geometry.eps_eff.sqrt();
    geometry
        .aperture_positions
        .iter()
        .zip(&geometry.line_lengths)
        .map(|(y, w)| -k0 * y * theta.sin() - kg * w)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingVector {
    /// DoA (rad).
    pub doa: f64,
    /// Beam-port power waves scaled so the largest magnitude is one.
    pub beam_amplitudes: Vec<Complex64>,
    /// Active reflection coefficient of every array port.
    pub array_reflections: Vec<Complex64>,
    /// 1-based number of the strongest beam port.
    pub peak_port: usize,
    pub focus_fraction: f64,
    pub spillover_fraction: f64,
    /// Beam amplitude of unit magnitude in absolute terms: power wave over the square root
    /// of the injected power.
    #[serde(default = "unit_scale")]
    pub transmission_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl CouplingVector {
    /// Build from raw beam amplitudes; metrics are derived, amplitudes kept as given.
    pub fn from_parts(doa: f64, beam: Vec<Complex64>, reflections: Vec<Complex64>) -> Self {
        let powers: Vec<f64> = beam.iter().map(|a| a.norm_sqr()).collect();
        let total: f64 = powers.iter().sum();
        let mut peak = 0;
        for (i, p) in powers.iter().enumerate() {
            if *p > powers[peak] {
                peak = i;
            }
        }
        let focus = if total > 0.0 { powers[peak] / total } else { 0.0 };
        CouplingVector {
            doa,
            beam_amplitudes: beam,
            array_reflections: reflections,
            peak_port: peak + 1,
            focus_fraction: focus,
            spillover_fraction: 1.0 - focus,
            transmission_scale: 1.0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.transmission_scale = scale;
        self
    }

    /// Beam amplitudes relative to the square root of the injected power.
    pub fn transmission(&self) -> Vec<Complex64> {
        self.beam_amplitudes
            .iter()
            .map(|a| a * self.transmission_scale)
            .collect()
    }

    /// As [`from_parts`](Self::from_parts) with the beam amplitudes scaled to a unit maximum.
    pub fn normalized(doa: f64, beam: Vec<Complex64>, reflections: Vec<Complex64>) -> Self {
        let max = beam.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let beam = if max > 0.0 {
            beam.into_iter().map(|a| a / max).collect()
        } else {
            beam
        };
        Self::from_parts(doa, beam, reflections)
    }

    pub fn n_beam(&self) -> usize {
        self.beam_amplitudes.len()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.beam_amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Beam-port power shares summing to one.
    pub fn power_fractions(&self) -> Vec<f64> {
        let p = self.powers();
        let t: f64 = p.iter().sum();
        p.iter().map(|v| if t > 0.0 { v / t } else { 0.0 }).collect()
    }

    /// Ratio of the two strongest beam-port powers (dB, >= 0).
    pub fn top_two_gap_db(&self) -> f64 {
        let mut p = self.powers();
        p.sort_by(|a, b| b.total_cmp(a));
        match (p.first(), p.get(1)) {
            (Some(a), Some(b)) if *b > 0.0 => 10.0 * (a / b).log10(),
            _ => f64::INFINITY,
        }
    }

    /// Port order reversed, as seen from the mirrored DoA.
    pub fn mirrored(&self) -> Self {
        let mut beam = self.beam_amplitudes.clone();
        beam.reverse();
        let mut refl = self.array_reflections.clone();
        refl.reverse();
        Self::from_parts(-self.doa, beam, refl).with_scale(self.transmission_scale)
    }
}

/// Everything one DoA run produces.
#[derive(Debug, Clone)]
pub struct DoaRun {
    pub vector: CouplingVector,
    pub run: PortRun,
    pub balance: PowerBalance,
}

impl DoaRun {
    /// Reflected array-port power on the side away from the DoA, relative to the injected power.
    ///
    /// For broadside the lower half is used, which mirrors the upper half.
    pub fn opposite_side_reflection(&self, geometry: &LensGeometry) -> f64 {
        let nb = geometry.n_beam();
        let sign = if self.vector.doa > 0.0 { 1.0 } else { -1.0 };
        let mut refl = 0.0;
        for (i, y) in geometry.aperture_positions.iter().enumerate() {
            let w = self.run.wave(nb + 1 + i).expect("array port wave");
            let p = w.away_from_lens.norm_sqr();
            if y * sign < 0.0 {
                refl += p;
            } else if *y == 0.0 {
                refl += 0.5 * p;
            }
        }
        refl / self.balance.injected
    }
}

/// Drive all array ports with the plane-wave ramp for `theta` and record every port.
pub fn simulate_doa(theta: f64, model: &LensModel, want_field: bool) -> Result<DoaRun> {
    let g = &model.geometry;
    phase_ramp(theta, g)?;
    let nb = g.n_beam();
    let drives: Vec<Excitation> = array_drive_phases(theta, g)
        .into_iter()
        .enumerate()
        .map(|(i, phase)| Excitation {
            port: nb + 1 + i,
            amplitude: 1.0,
            phase,
        })
        .collect();
    let run = model.run(&drives, want_field)?;
    let beam: Vec<Complex64> = (1..=nb)
        .map(|p| run.wave(p).map(|w| w.away_from_lens))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Degenerate("missing beam port wave".into()))?;
    let refl: Vec<Complex64> = (0..g.n_array())
        .map(|i| {
            run.wave(nb + 1 + i).map(|w| {
                if w.toward_lens.norm() > 0.0 {
                    w.away_from_lens / w.toward_lens
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Degenerate("missing array port wave".into()))?;
    let balance = run.balance(g.port_segments.len());
    let peak = beam.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let scale = if balance.injected > 0.0 { peak / balance.injected.sqrt() } else { 0.0 };
    Ok(DoaRun {
        vector: CouplingVector::normalized(theta, beam, refl).with_scale(scale),
        run,
        balance,
    })
}

pub fn doa_response(theta: f64, model: &LensModel) -> Result<CouplingVector> {
    simulate_doa(theta, model, false).map(|r| r.vector)
}

/// One run per DoA, in parallel; the table is ordered by angle.
pub fn sweep(doas: &[f64], model: &LensModel) -> Result<CouplingTable> {
    if doas.is_empty() {
        return Err(Error::Invalid("empty DoA list".into()));
    }
    if doas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("DoA list must be strictly increasing".into()));
    }
    let vectors: Vec<CouplingVector> = doas
        .par_iter()
        .with_max_len(1)
        .map(|&t| {
            doa_response(t, model).map_err(|e| Error::Doa {
                theta_deg: t.to_degrees(),
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    CouplingTable::new(
        doas.to_vec(),
        vectors,
        super::table::TableMeta::from_model(model),
    )
}
