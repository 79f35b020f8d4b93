//! Driving the lens model with port excitations and separating the port waves.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdtd::{
    rasterize, Engine, LineSource, MaterialGrid, PortFace, PowerAudit, Probe, RasterConfig,
    Region, RunSpec, Waveform,
};
use crate::lens::{LensGeometry, PortKind};
use crate::material::{C0, MU0};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SourceWaveform {
    /// Carrier with a raised-cosine start; phasors from a steady window.
    #[default]
    Continuous,
    /// Gaussian-modulated carrier; phasors from the whole record.
    Pulse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdtdConfig {
    /// Cells per guided wavelength.
    pub resolution: f64,
    pub pml_cells: usize,
    pub pml_order: f64,
    /// Fraction of the 2D stability limit.
    pub courant: f64,
    pub max_cells: usize,
    /// Matched termination length of every taper and dummy wall (guided wavelengths).
    pub absorber_len: f64,
    /// Probe-line spacing for wave separation (guided wavelengths).
    pub probe_spacing: f64,
    pub waveform: SourceWaveform,
    pub ramp_periods: f64,
    pub pulse_bandwidth: f64,
    /// Run length in domain traversal times (ignored when `steps` is set).
    pub run_traversals: f64,
    /// Start of the DFT window for continuous runs, in traversal times.
    pub window_start_traversals: f64,
    pub steps: Option<usize>,
    /// Keep a raw `Ez` snapshot every this many steps.
    pub snapshot_every: Option<usize>,
}

impl Default for FdtdConfig {
    fn default() -> Self {
        Self {
            resolution: 20.0,
            pml_cells: 10,
            pml_order: 3.0,
            courant: 0.99,
            max_cells: 4_000_000,
            absorber_len: 1.5,
            probe_spacing: 0.125,
            waveform: SourceWaveform::Continuous,
            ramp_periods: 10.0,
            pulse_bandwidth: 0.3,
            run_traversals: 5.0,
            window_start_traversals: 2.0,
            steps: None,
            snapshot_every: None,
        }
    }
}

impl FdtdConfig {
    pub fn validate(&self) -> Result<()> {
        let config = Error::config;
        if !(self.resolution >= 15.0) {
            return Err(config("fdtd.resolution", "must be at least 15 cells per guided wavelength"));
        }
        if !(self.courant > 0.0 && self.courant <= 1.0) {
            return Err(config("fdtd.courant", "must lie in (0, 1]"));
        }
        if self.pml_cells == 0 {
            return Err(config("fdtd.pml_cells", "must be positive"));
        }
        if !(self.absorber_len > 0.0) {
            return Err(config("fdtd.absorber_len", "must be positive"));
        }
        if !(self.probe_spacing > 0.0 && self.probe_spacing < 0.25) {
            return Err(config("fdtd.probe_spacing", "must lie in (0, 0.25) guided wavelengths"));
        }
        if !(self.pulse_bandwidth > 0.0 && self.pulse_bandwidth < 1.0) {
            return Err(config("fdtd.pulse_bandwidth", "must lie in (0, 1)"));
        }
        if !(self.run_traversals >= 3.0) {
            return Err(config("fdtd.run_traversals", "must be at least 3"));
        }
        if !(self.window_start_traversals >= 0.0
            && self.window_start_traversals < self.run_traversals)
        {
            return Err(config("fdtd.window_start_traversals", "must lie in [0, run_traversals)"));
        }
        if self.ramp_periods < 0.0 {
            return Err(config("fdtd.ramp_periods", "must be non-negative"));
        }
        Ok(())
    }

    pub fn raster(&self) -> RasterConfig {
        RasterConfig {
            resolution: self.resolution,
            pml_cells: self.pml_cells,
            pml_order: self.pml_order,
            max_cells: self.max_cells,
            margin_cells: 2,
            absorber_len: self.absorber_len,
            probe_spacing: self.probe_spacing,
        }
    }
}

/// Drive of one port: `amplitude * exp(j phase)` for the wave launched toward the lens,
/// referred to the port's contour point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Excitation {
    pub port: usize,
    pub amplitude: f64,
    /// Phase in radians; values beyond one turn become true time delays.
    pub phase: f64,
}

/// Power-wave amplitudes at a port reference plane: `|a|^2` is the power in W/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortWave {
    pub port: usize,
    pub kind: PortKind,
    pub toward_lens: Complex64,
    pub away_from_lens: Complex64,
    pub beta: f64,
    pub beta_measured: bool,
}

#[derive(Debug, Clone)]
pub struct PortRun {
    pub waves: Vec<PortWave>,
    pub audit: PowerAudit,
    pub field: Option<Vec<Complex64>>,
    pub snapshots: Vec<(usize, Vec<f64>)>,
    pub dt: f64,
    pub n_steps: usize,
    pub window: (usize, usize),
}

/// Power balance of one run (W/m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBalance {
    pub injected: f64,
    pub beam_out: f64,
    pub array_out: f64,
    pub absorbed_dummy: f64,
    pub absorbed_dielectric: f64,
    pub absorbed_pml: f64,
}

impl PowerBalance {
    pub fn recorded(&self) -> f64 {
        self.beam_out + self.array_out
    }

    pub fn absorbed(&self) -> f64 {
        self.absorbed_dummy + self.absorbed_dielectric + self.absorbed_pml
    }

    /// (recorded + absorbed) / injected.
    pub fn closure(&self) -> f64 {
        (self.recorded() + self.absorbed()) / self.injected
    }
}

impl PortRun {
    pub fn wave(&self, port: usize) -> Option<&PortWave> {
        self.waves.iter().find(|w| w.port == port)
    }

    pub fn balance(&self, n_ports: usize) -> PowerBalance {
        let injected = self.waves.iter().map(|w| w.toward_lens.norm_sqr()).sum();
        let out = |k: PortKind| {
            self.waves
                .iter()
                .filter(|w| w.kind == k)
                .map(|w| w.away_from_lens.norm_sqr())
                .sum()
        };
        let a = &self.audit;
        PowerBalance {
            injected,
            beam_out: out(PortKind::Beam),
            array_out: out(PortKind::Array),
            absorbed_dummy: a.loss_where(|r| matches!(r, Region::Absorber(id) if id as usize > n_ports)),
            absorbed_dielectric: a.loss_where(|r| r == Region::Lens),
            absorbed_pml: a.loss_where(|r| r == Region::Pml),
        }
    }
}

/// Phase constant of the fundamental mode of a grid channel of the given width.
pub fn channel_beta(freq: f64, eps_r: f64, dx: f64, dt: f64, width: f64) -> f64 {
    let c = C0 / eps_r.sqrt();
    let w = 2.0 * PI * freq;
    let lhs = (dx / (c * dt) * (w * dt / 2.0).sin()).powi(2);
    let ky = PI / width;
    let s = lhs - (ky * dx / 2.0).sin().powi(2);
    if s <= 0.0 {
        return 0.0;
    }
    2.0 / dx * s.sqrt().min(1.0).asin()
}

/// A rasterized lens ready for repeated runs.
#[derive(Debug, Clone)]
pub struct LensModel {
    pub geometry: LensGeometry,
    pub grid: MaterialGrid,
    pub cfg: FdtdConfig,
    pub dt: f64,
}

impl LensModel {
    pub fn new(geometry: &LensGeometry, cfg: &FdtdConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = rasterize(geometry, &cfg.raster())?;
        let dt = crate::fdtd::time_step(grid.dx, grid.eps_r, cfg.courant);
        Ok(LensModel {
            geometry: geometry.clone(),
            grid,
            cfg: cfg.clone(),
            dt,
        })
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.grid.freq
    }

    /// Time for light in the medium to cross the domain diagonal.
    pub fn traversal_time(&self) -> f64 {
        let g = &self.grid;
        let diag = g.dx * (((g.nx - 1).pow(2) + (g.ny - 1).pow(2)) as f64).sqrt();
        diag * g.eps_r.sqrt() / C0
    }

    pub fn n_steps(&self) -> Result<usize> {
        let trav = self.traversal_time() / self.dt;
        let n = match self.cfg.steps {
            Some(n) => n,
            None => (self.cfg.run_traversals * trav).ceil() as usize,
        };
        if (n as f64) < 3.0 * trav {
            return Err(Error::Config {
                key: "fdtd.steps".into(),
                msg: format!("{n} steps is shorter than three traversals ({:.0} steps)", 3.0 * trav),
            });
        }
        Ok(n)
    }

    fn window(&self, n_steps: usize) -> (usize, usize) {
        match self.cfg.waveform {
            SourceWaveform::Pulse => (0, n_steps),
            SourceWaveform::Continuous => {
                let trav = self.traversal_time() / self.dt;
                let start = ((self.cfg.window_start_traversals * trav) as usize).min(n_steps - 1);
                crate::fdtd::whole_period_window(start, n_steps, self.dt, self.grid.freq)
            }
        }
    }

    fn waveform(&self) -> Waveform {
        let f = self.grid.freq;
        match self.cfg.waveform {
            SourceWaveform::Continuous => Waveform::Continuous {
                freq: f,
                ramp: self.cfg.ramp_periods / f,
            },
            SourceWaveform::Pulse => Waveform::pulse(f, self.cfg.pulse_bandwidth),
        }
    }

    pub fn face(&self, port: usize) -> Result<&PortFace> {
        self.grid.face(port).ok_or(Error::IndexOutOfRange {
            what: "port",
            index: port,
            len: self.grid.port_faces.len(),
        })
    }

    /// Nominal fundamental-mode phase constant of a port channel.
    pub fn nominal_beta(&self, face: &PortFace) -> f64 {
        channel_beta(self.grid.freq, self.grid.eps_r, self.grid.dx, self.dt, face.width)
    }

    /// Mode power per unit peak-amplitude squared.
    fn power_factor(&self, face: &PortFace, beta: f64) -> f64 {
        beta * face.width / (4.0 * self.omega() * MU0)
    }

    /// Run with the given port drives, recording every port.
    pub fn run(&self, drives: &[Excitation], want_field: bool) -> Result<PortRun> {
        let n_steps = self.n_steps()?;
        let window = self.window(n_steps);
        let omega = self.omega();
        let waveform = self.waveform();
        let dx = self.grid.dx;

        // phase at the source line: add the channel run back to the contour point
        let mut launch = Vec::with_capacity(drives.len());
        for d in drives {
            if !d.amplitude.is_finite() || !d.phase.is_finite() {
                return Err(Error::Invalid(format!("non-finite drive on port {}", d.port)));
            }
            let face = self.face(d.port)?;
            let beta = self.nominal_beta(face);
            if beta <= 0.0 {
                return Err(Error::Degenerate(format!("port {} channel is below cutoff", d.port)));
            }
            // equal launched power for equal drive amplitude
            let scale = (beta * dx).sin() / self.power_factor(face, beta).sqrt();
            launch.push((face, d.amplitude * scale, d.phase + beta * face.source_distance));
        }
        let origin = launch.iter().map(|l| l.2).fold(0.0, f64::max);
        let sources: Vec<LineSource> = launch
            .iter()
            .map(|(face, amp, psi)| LineSource {
                taps: face.source.taps.clone(),
                amplitude: *amp,
                delay: (origin - psi) / omega,
                waveform,
            })
            .collect();

        let mut probes = Vec::with_capacity(3 * self.grid.port_faces.len());
        for f in &self.grid.port_faces {
            for (k, line) in f.probes.iter().enumerate() {
                probes.push(Probe {
                    label: format!("{}:{k}", f.port),
                    taps: line.taps.clone(),
                });
            }
        }
        let engine = Engine::new(&self.grid, self.cfg.courant)?;
        let spec = RunSpec {
            n_steps,
            window,
            dft_freq: self.grid.freq,
            record_series: false,
            field_dft: want_field,
            audit: true,
            energy_every: None,
            snapshot_every: self.cfg.snapshot_every,
        };
        let mut state = engine.new_state(probes.len());
        let out = engine.run(&mut state, &sources, &probes, &spec)?;

        // reference: the unit waveform seen through the same window, undelayed
        let reference = {
            let (w0, w1) = window;
            let mut acc = Complex64::new(0.0, 0.0);
            for n in w0..w1 {
                let t = (n + 1) as f64 * self.dt;
                acc += Complex64::from_polar(waveform.value(t), -omega * t);
            }
            acc * (2.0 / (w1 - w0).max(1) as f64)
        };
        let correction = Complex64::from_polar(1.0, origin) / reference;

        let mut waves = Vec::with_capacity(self.grid.port_faces.len());
        for (f, ph) in self.grid.port_faces.iter().zip(out.probe_phasors.chunks(3)) {
            let (em, e0, ep) = (ph[0] * correction, ph[1] * correction, ph[2] * correction);
            let nominal = self.nominal_beta(f);
            let spacing = f.probe_spacing();
            let mut beta = nominal;
            let mut measured = false;
            if e0.norm() > 0.0 {
                let c = (em + ep) / (2.0 * e0);
                if c.re.abs() <= 1.0 && c.im.abs() < 0.05 {
                    let b = c.re.acos() / spacing;
                    if (b - nominal).abs() < 0.15 * nominal {
                        beta = b;
                        measured = true;
                    }
                }
            }
            let bd = beta * spacing;
            let fwd = Complex64::from_polar(1.0, -bd);
            let bwd = Complex64::from_polar(1.0, bd);
            let away = (ep - e0 * bwd) / (fwd - bwd);
            let toward = e0 - away;
            let scale = self.power_factor(f, beta).sqrt();
            // refer both waves from the reference plane back to the contour point
            let shift = Complex64::from_polar(1.0, beta * reference_offset(f));
            waves.push(PortWave {
                port: f.port,
                kind: f.kind,
                toward_lens: toward * scale / shift,
                away_from_lens: away * scale * shift,
                beta,
                beta_measured: measured,
            });
        }
        Ok(PortRun {
            waves,
            audit: out.audit.unwrap_or_default(),
            field: out.field_phasor.map(|f| f.into_iter().map(|v| v * correction).collect()),
            snapshots: out.snapshots,
            dt: self.dt,
            n_steps: out.n_steps,
            window,
        })
    }
}

/// Distance from the port's contour point out to its reference probe line.
fn reference_offset(face: &PortFace) -> f64 {
    face.probes[1].depth - (face.source.depth - face.source_distance)
}
