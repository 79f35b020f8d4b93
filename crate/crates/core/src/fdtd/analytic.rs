//! Line-source reference solution used to check the solver.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::MaterialGrid;
use super::solver::{whole_period_window, Engine, LineSource, Probe, RunSpec, Waveform};
use crate::error::{Error, Result};
use crate::material::{guided_wavelength, MU0};

/// Hankel function of the second kind, order zero, from its large-argument expansion.
///
/// Accurate to better than 1e-6 for `x >= 8`.
pub fn hankel2_0(x: f64) -> Complex64 {
    let minus_i = Complex64::new(0.0, -1.0);
    let mut sum = Complex64::new(1.0, 0.0);
    let mut term = 1.0f64;
    let mut weight = Complex64::new(1.0, 0.0);
    for k in 1..40 {
        let m = (2 * k - 1) as f64;
        let next = -term * m * m / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() || next.abs() < 1e-18 {
            break;
        }
        term = next;
        weight *= minus_i;
        sum += weight * term;
    }
    let amp = (2.0 / (PI * x)).sqrt();
    sum * Complex64::from_polar(amp, -(x - PI / 4.0))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub n: usize,
    pub resolution: f64,
    pub eps_r: f64,
    pub freq: f64,
    pub courant: f64,
    pub pml_cells: usize,
    /// Observer distances from the source (guided wavelengths).
    pub distances: Vec<f64>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            n: 300,
            resolution: 30.0,
            eps_r: 4.4263,
            freq: 28e9,
            courant: 0.99,
            pml_cells: 10,
            distances: vec![2.0, 2.5, 3.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObserverResult {
    pub distance_wavelengths: f64,
    /// Direction of the observer from the source (deg).
    pub bearing_deg: f64,
    pub simulated: Complex64,
    pub analytic: Complex64,
    pub magnitude_error: f64,
    pub phase_error_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub observers: Vec<ObserverResult>,
    pub max_magnitude_error: f64,
    pub max_phase_error_deg: f64,
    /// Residual energy of a pulse run relative to its peak.
    pub final_energy_ratio: f64,
    pub steps: usize,
}

impl ValidationReport {
    pub fn passes(&self, mag_tol: f64, phase_tol_deg: f64, energy_tol: f64) -> bool {
        self.max_magnitude_error <= mag_tol
            && self.max_phase_error_deg <= phase_tol_deg
            && self.final_energy_ratio <= energy_tol
    }
}

/// Field of a soft single-node source, as predicted for a line current in an unbounded medium.
///
/// `amplitude` is the added field per step; the effective current sits half a step before
/// the node it is added to.
pub fn line_source_field(
    amplitude: f64,
    rho: f64,
    freq: f64,
    eps_r: f64,
    dx: f64,
    dt: f64,
) -> Complex64 {
    let omega = 2.0 * PI * freq;
    let eps = crate::material::EPS0 * eps_r;
    let k = 2.0 * PI / guided_wavelength(freq, eps_r);
    let current = Complex64::from_polar(-eps * dx * dx * amplitude / dt, omega * dt / 2.0);
    -current * (omega * MU0 / 4.0) * hankel2_0(k * rho)
}

/// Compare a point-source run on a uniform grid with the analytic line-source field, then
/// check that a pulse drains through the PML.
pub fn validate_line_source(cfg: &ValidationConfig) -> Result<ValidationReport> {
    if cfg.n < 2 * cfg.pml_cells + 20 {
        return Err(Error::Invalid(format!("validation grid {} too small", cfg.n)));
    }
    let lg = guided_wavelength(cfg.freq, cfg.eps_r);
    let dx = lg / cfg.resolution;
    let grid = MaterialGrid::uniform(cfg.n, cfg.n, dx, cfg.eps_r, cfg.freq, 0.0, cfg.pml_cells)?;
    let engine = Engine::new(&grid, cfg.courant)?;
    let dt = engine.dt;
    let c = cfg.n / 2;
    let centre = grid.index(c, c);

    let mut observers = Vec::new();
    let mut probes = Vec::new();
    for &d in &cfg.distances {
        let cells = d * cfg.resolution;
        let axial = cells.round() as usize;
        let diag = (cells / 2f64.sqrt()).round() as usize;
        if c + axial >= cfg.n - cfg.pml_cells {
            return Err(Error::Invalid(format!("observer at {d} wavelengths lies in the PML")));
        }
        for (bearing, i, j) in [(0.0, c + axial, c), (45.0, c + diag, c + diag)] {
            probes.push(Probe::point(format!("{d}@{bearing}"), grid.index(i, j)));
            let rho = dx * (((i - c).pow(2) + (j - c).pow(2)) as f64).sqrt();
            observers.push((d, bearing, rho));
        }
    }

    let period = 1.0 / (cfg.freq * dt);
    let ramp = 5.0 / cfg.freq;
    // ramp, transit to the PML and back, then settle
    let settle = ((5.0 + 3.0 * cfg.n as f64 / cfg.resolution) * period) as usize;
    let (w0, w1) = whole_period_window(settle, settle + (8.0 * period) as usize, dt, cfg.freq);
    let spec = RunSpec {
        n_steps: w1,
        window: (w0, w1),
        dft_freq: cfg.freq,
        record_series: false,
        field_dft: false,
        audit: false,
        energy_every: None,
        snapshot_every: None,
    };
    let src = [LineSource {
        taps: vec![(centre, 1.0)],
        amplitude: 1.0,
        delay: 0.0,
        waveform: Waveform::Continuous {
            freq: cfg.freq,
            ramp,
        },
    }];
    let mut state = engine.new_state(probes.len());
    let out = engine.run(&mut state, &src, &probes, &spec)?;

    let mut results = Vec::new();
    for ((d, bearing, rho), sim) in observers.into_iter().zip(out.probe_phasors) {
        let ana = line_source_field(1.0, rho, cfg.freq, cfg.eps_r, dx, dt);
        let mag = (sim.norm() - ana.norm()).abs() / ana.norm();
        let ph = (sim / ana).arg().to_degrees().abs();
        results.push(ObserverResult {
            distance_wavelengths: d,
            bearing_deg: bearing,
            simulated: sim,
            analytic: ana,
            magnitude_error: mag,
            phase_error_deg: ph,
        });
    }

    let pulse = [LineSource {
        taps: vec![(centre, 1.0)],
        amplitude: 1.0,
        delay: 0.0,
        waveform: Waveform::pulse(cfg.freq, 0.3),
    }];
    let mut state = engine.new_state(0);
    let n_pulse = settle * 3;
    let every = (period as usize).max(1);
    let spec = RunSpec {
        n_steps: n_pulse,
        window: (0, 0),
        dft_freq: cfg.freq,
        record_series: false,
        field_dft: false,
        audit: false,
        energy_every: Some(every),
        snapshot_every: None,
    };
    let out_pulse = engine.run(&mut state, &pulse, &[], &spec)?;
    let peak = out_pulse.energy.iter().map(|e| e.1).fold(0.0, f64::max);
    let last = out_pulse.energy.last().map(|e| e.1).unwrap_or(0.0);

    Ok(ValidationReport {
        max_magnitude_error: results.iter().map(|r| r.magnitude_error).fold(0.0, f64::max),
        max_phase_error_deg: results.iter().map(|r| r.phase_error_deg).fold(0.0, f64::max),
        observers: results,
        final_energy_ratio: if peak > 0.0 { last / peak } else { 0.0 },
        steps: out.n_steps + out_pulse.n_steps,
    })
}
