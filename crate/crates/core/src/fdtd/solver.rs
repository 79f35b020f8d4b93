//! Leapfrog update of the TMz Yee fields with split-field PML.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{CellKind, MaterialGrid, Region};
use crate::error::{Error, Result};
use crate::material::{C0, MU0};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Waveform {
    /// Gaussian-modulated carrier peaking at `delay` seconds.
    GaussianPulse { freq: f64, width: f64, delay: f64 },
    /// Carrier switched on with a raised-cosine ramp of `ramp` seconds.
    Continuous { freq: f64, ramp: f64 },
}

impl Waveform {
    pub fn freq(&self) -> f64 {
        match *self {
            Waveform::GaussianPulse { freq, .. } | Waveform::Continuous { freq, .. } => freq,
        }
    }

    /// Pulse centred three widths after t = 0 with a bandwidth of about `rel_bw * freq`.
    pub fn pulse(freq: f64, rel_bw: f64) -> Self {
        let width = 1.0 / (PI * rel_bw * freq);
        Waveform::GaussianPulse {
            freq,
            width,
            delay: 4.0 * width,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Waveform::GaussianPulse { freq, width, delay } => {
                let u = (t - delay) / width;
                (-0.5 * u * u).exp() * (2.0 * PI * freq * (t - delay)).cos()
            }
            Waveform::Continuous { freq, ramp } => {
                if t <= 0.0 {
                    return 0.0;
                }
                let env = if t >= ramp {
                    1.0
                } else {
                    0.5 * (1.0 - (PI * t / ramp).cos())
                };
                env * (2.0 * PI * freq * t).cos()
            }
        }
    }
}

/// Soft source adding `weight * amplitude * waveform(t - delay)` to each tapped node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSource {
    pub taps: Vec<(usize, f64)>,
    pub amplitude: f64,
    pub delay: f64,
    pub waveform: Waveform,
}

/// Weighted sum of `Ez` over a set of nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub label: String,
    pub taps: Vec<(usize, f64)>,
}

impl Probe {
    pub fn point(label: impl Into<String>, node: usize) -> Self {
        Probe {
            label: label.into(),
            taps: vec![(node, 1.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub n_steps: usize,
    /// Steps `[start, end)` entering the running DFTs and the power audit.
    pub window: (usize, usize),
    pub dft_freq: f64,
    pub record_series: bool,
    pub field_dft: bool,
    pub audit: bool,
    /// Record the total field energy every this many steps.
    pub energy_every: Option<usize>,
    /// Keep a copy of `Ez` every this many steps.
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PowerAudit {
    /// Time-averaged power delivered by the sources (W/m).
    pub source: f64,
    /// Time-averaged power dissipated per region (W/m).
    pub losses: BTreeMap<Region, f64>,
}

impl PowerAudit {
    pub fn total_loss(&self) -> f64 {
        self.losses.values().sum()
    }

    pub fn loss_where(&self, pred: impl Fn(Region) -> bool) -> f64 {
        self.losses
            .iter()
            .filter(|(r, _)| pred(**r))
            .map(|(_, v)| v)
            .sum()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FdtdState {
    /// Out-of-plane electric field on the nodes (V/m).
    pub ez: Vec<f64>,
    /// `nx * (ny - 1)` values at `(i, j + 1/2)` (A/m).
    pub hx: Vec<f64>,
    /// `(nx - 1) * ny` values at `(i + 1/2, j)` (A/m).
    pub hy: Vec<f64>,
    /// Split parts of `Ez` inside the PML ring, in the engine's PML node order.
    pub pml_ezx: Vec<f64>,
    pub pml_ezy: Vec<f64>,
    pub step: usize,
    /// Running DFT sums, one per probe.
    pub probe_accumulators: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dt: f64,
    pub n_steps: usize,
    pub window: (usize, usize),
    pub probe_phasors: Vec<Complex64>,
    pub probe_series: Option<Vec<Vec<f64>>>,
    pub field_phasor: Option<Vec<Complex64>>,
    pub audit: Option<PowerAudit>,
    /// `(step, energy in J/m)` samples.
    pub energy: Vec<(usize, f64)>,
    /// `(step, Ez)` copies.
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

/// Rows handed to one rayon task; keeps scheduling overhead small next to the row work.
const ROWS_PER_TASK: usize = 32;

/// Update coefficients `new = a * old + b * curl` and the conductivity behind them.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Coef {
    a: f64,
    b: f64,
    sigma: f64,
}

const ZERO: Coef = Coef {
    a: 0.0,
    b: 0.0,
    sigma: 0.0,
};

/// Per-node update coefficients of one field component.
struct Coefs {
    a: Vec<f64>,
    b: Vec<f64>,
    /// Permittivity or permeability the coefficients were built with.
    m: f64,
    dt: f64,
}

impl Coefs {
    fn build(values: impl Iterator<Item = Coef>, m: f64, dt: f64) -> Self {
        let (a, b) = values.map(|c| (c.a, c.b)).unzip();
        Coefs { a, b, m, dt }
    }

    /// Conductivity recovered from the decay coefficient.
    fn sigma(&self, k: usize) -> f64 {
        let a = self.a[k];
        if self.b[k] == 0.0 {
            return 0.0;
        }
        2.0 * self.m / self.dt * (1.0 - a) / (1.0 + a)
    }
}

#[derive(Debug, Clone, Copy)]
struct PmlNode {
    k: usize,
    /// `Hy` index at `(i + 1/2, j)` and `Hx` index at `(i, j + 1/2)`.
    hy: usize,
    hx: usize,
    x: Coef,
    y: Coef,
}

/// Update coefficients for a grid at a fixed time step.
pub struct Engine<'g> {
    pub grid: &'g MaterialGrid,
    pub dt: f64,
    e: Coefs,
    hx: Coefs,
    hy: Coefs,
    pml: Vec<PmlNode>,
    /// PML slot of every node, `u32::MAX` outside the ring.
    pml_slot: Vec<u32>,
}

/// Stable time step for cell size `dx` in a medium of relative permittivity `eps_r`.
pub fn time_step(dx: f64, eps_r: f64, courant: f64) -> f64 {
    courant * dx * eps_r.sqrt() / (C0 * 2f64.sqrt())
}

fn coef(sigma: f64, dt: f64, m: f64, dx: f64) -> Coef {
    let r = sigma * dt / (2.0 * m);
    Coef {
        a: (1.0 - r) / (1.0 + r),
        b: dt / (m * dx) / (1.0 + r),
        sigma,
    }
}

impl<'g> Engine<'g> {
    pub fn new(grid: &'g MaterialGrid, courant: f64) -> Result<Self> {
        if !(courant > 0.0 && courant <= 1.0) {
            return Err(Error::Invalid(format!("courant number {courant} outside (0, 1]")));
        }
        let dt = time_step(grid.dx, grid.eps_r, courant);
        let (nx, ny, dx) = (grid.nx, grid.ny, grid.dx);
        let eps = grid.eps();
        let mut pml = Vec::new();
        let mut pml_slot = vec![u32::MAX; nx * ny];
        let interior = |k: usize| {
            let (i, j) = (k % nx, k / nx);
            i > 0 && j > 0 && i < nx - 1 && j < ny - 1 && grid.kinds[k] != CellKind::Conductor
        };
        for k in 0..nx * ny {
            if interior(k) && matches!(grid.kinds[k], CellKind::Pml { .. }) {
                let (i, j) = (k % nx, k / nx);
                let sx = grid.sigma_e[k] + grid.pml_sigma(grid.pml_depth_x(i as f64));
                let sy = grid.sigma_e[k] + grid.pml_sigma(grid.pml_depth_y(j as f64));
                pml_slot[k] = pml.len() as u32;
                pml.push(PmlNode {
                    k,
                    hy: j * (nx - 1) + i,
                    hx: j * nx + i,
                    x: coef(sx, dt, eps, dx),
                    y: coef(sy, dt, eps, dx),
                });
            }
        }
        let e = Coefs::build(
            (0..nx * ny).map(|k| {
                if interior(k) && pml_slot[k] == u32::MAX {
                    coef(grid.sigma_e[k], dt, eps, dx)
                } else {
                    ZERO
                }
            }),
            eps,
            dt,
        );
        let to_mag = MU0 / eps;
        let hx = Coefs::build((0..nx * (ny - 1)).map(|k| {
            let j = k / nx;
            let iso = 0.5 * (grid.sigma_m[k] + grid.sigma_m[k + nx]);
            let s = (grid.pml_sigma(grid.pml_depth_y(j as f64 + 0.5)) + iso) * to_mag;
            coef(s, dt, MU0, dx)
        }), MU0, dt);
        let hy = Coefs::build((0..(nx - 1) * ny).map(|k| {
            let (i, j) = (k % (nx - 1), k / (nx - 1));
            let e = j * nx + i;
            let iso = 0.5 * (grid.sigma_m[e] + grid.sigma_m[e + 1]);
            let s = (grid.pml_sigma(grid.pml_depth_x(i as f64 + 0.5)) + iso) * to_mag;
            coef(s, dt, MU0, dx)
        }), MU0, dt);
        Ok(Engine {
            grid,
            dt,
            e,
            hx,
            hy,
            pml,
            pml_slot,
        })
    }

    pub fn new_state(&self, n_probes: usize) -> FdtdState {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        FdtdState {
            ez: vec![0.0; nx * ny],
            hx: vec![0.0; nx * (ny - 1)],
            hy: vec![0.0; (nx - 1) * ny],
            pml_ezx: vec![0.0; self.pml.len()],
            pml_ezy: vec![0.0; self.pml.len()],
            step: 0,
            probe_accumulators: vec![Complex64::new(0.0, 0.0); n_probes],
        }
    }

    /// True when `Ez` at node `k` is updated (not a conductor or the outer rim).
    pub fn is_active(&self, k: usize) -> bool {
        self.e.b[k] != 0.0 || self.pml_slot[k] != u32::MAX
    }

    fn update_h(&self, s: &mut FdtdState) {
        let nx = self.grid.nx;
        let ez = &s.ez;
        let t = &self.hx;
        s.hx.par_chunks_mut(nx)
            .with_min_len(ROWS_PER_TASK)
            .enumerate()
            .for_each(|(j, row)| {
                let r = j * nx..(j + 1) * nx;
                let lo = &ez[r.clone()];
                let hi = &ez[(j + 1) * nx..(j + 2) * nx];
                let (a, b) = (&t.a[r.clone()], &t.b[r]);
                for ((h, (a, b)), (lo, hi)) in row.iter_mut().zip(a.iter().zip(b)).zip(lo.iter().zip(hi)) {
                    *h = a * *h - b * (hi - lo);
                }
            });
        let m = nx - 1;
        let t = &self.hy;
        s.hy.par_chunks_mut(m)
            .with_min_len(ROWS_PER_TASK)
            .enumerate()
            .for_each(|(j, row)| {
                let r = j * m..(j + 1) * m;
                let lo = &ez[j * nx..j * nx + m];
                let hi = &ez[j * nx + 1..j * nx + 1 + m];
                let (a, b) = (&t.a[r.clone()], &t.b[r]);
                for ((h, (a, b)), (lo, hi)) in row.iter_mut().zip(a.iter().zip(b)).zip(lo.iter().zip(hi)) {
                    *h = a * *h + b * (hi - lo);
                }
            });
    }

    fn update_e(&self, s: &mut FdtdState) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let m = nx - 1;
        let (hx, hy) = (&s.hx, &s.hy);
        let t = &self.e;
        s.ez.par_chunks_mut(nx)
            .with_min_len(ROWS_PER_TASK)
            .enumerate()
            .for_each(|(j, row)| {
                if j == 0 || j == ny - 1 {
                    return;
                }
                // interior nodes i = 1 .. nx-2 of row j
                let n = nx - 2;
                let ez = &mut row[1..1 + n];
                let hy_l = &hy[j * m..j * m + n];
                let hy_r = &hy[j * m + 1..j * m + 1 + n];
                let hx_lo = &hx[(j - 1) * nx + 1..(j - 1) * nx + 1 + n];
                let hx_hi = &hx[j * nx + 1..j * nx + 1 + n];
                let a = &t.a[j * nx + 1..j * nx + 1 + n];
                let b = &t.b[j * nx + 1..j * nx + 1 + n];
                let it = ez.iter_mut().zip(a.iter().zip(b)).zip(hy_l.iter().zip(hy_r));
                for (((e, (a, b)), (yl, yr)), (xl, xh)) in it.zip(hx_lo.iter().zip(hx_hi)) {
                    *e = a * *e + b * (yr - yl - xh + xl);
                }
            });
        for (p, node) in self.pml.iter().enumerate() {
            let dhy = hy[node.hy] - hy[node.hy - 1];
            let dhx = hx[node.hx] - hx[node.hx - nx];
            let ex = node.x.a * s.pml_ezx[p] + node.x.b * dhy;
            let ey = node.y.a * s.pml_ezy[p] - node.y.b * dhx;
            s.pml_ezx[p] = ex;
            s.pml_ezy[p] = ey;
            s.ez[node.k] = ex + ey;
        }
    }

    fn source_values(sources: &[LineSource], t: f64) -> Vec<f64> {
        sources
            .iter()
            .map(|src| src.amplitude * src.waveform.value(t - src.delay))
            .collect()
    }

    fn apply_sources(&self, s: &mut FdtdState, sources: &[LineSource], values: &[f64]) {
        for (src, &v) in sources.iter().zip(values) {
            if v == 0.0 {
                continue;
            }
            for &(n, w) in &src.taps {
                if !self.is_active(n) {
                    continue;
                }
                s.ez[n] += v * w;
                let slot = self.pml_slot[n];
                if slot != u32::MAX {
                    s.pml_ezx[slot as usize] += v * w;
                }
            }
        }
    }

    /// Advance the fields by one time step.
    pub fn step(&self, state: &mut FdtdState, sources: &[LineSource]) {
        self.update_h(state);
        self.update_e(state);
        state.step += 1;
        let values = Self::source_values(sources, state.step as f64 * self.dt);
        self.apply_sources(state, sources, &values);
    }

    /// Electromagnetic energy per unit depth (J/m).
    pub fn energy(&self, s: &FdtdState) -> f64 {
        let a = self.grid.dx * self.grid.dx;
        let we: f64 = s.ez.iter().map(|e| e * e).sum::<f64>() * 0.5 * self.grid.eps();
        let wh: f64 = s.hx.iter().chain(&s.hy).map(|h| h * h).sum::<f64>() * 0.5 * MU0;
        (we + wh) * a
    }

    pub fn probe_value(ez: &[f64], probe: &Probe) -> f64 {
        probe.taps.iter().map(|&(n, w)| w * ez[n]).sum()
    }

    /// Run `spec.n_steps` steps from the current state.
    pub fn run(
        &self,
        state: &mut FdtdState,
        sources: &[LineSource],
        probes: &[Probe],
        spec: &RunSpec,
    ) -> Result<RunOutput> {
        let (w0, w1) = spec.window;
        if w0 > w1 || w1 > spec.n_steps {
            return Err(Error::Invalid(format!(
                "DFT window {w0}..{w1} outside 0..{}",
                spec.n_steps
            )));
        }
        if state.probe_accumulators.len() != probes.len() {
            state.probe_accumulators = vec![Complex64::new(0.0, 0.0); probes.len()];
        }
        let grid = self.grid;
        let npts = grid.len();
        let omega = 2.0 * PI * spec.dft_freq;
        let area = grid.dx * grid.dx;
        let eps = grid.eps();
        let mut series: Option<Vec<Vec<f64>>> = spec
            .record_series
            .then(|| vec![Vec::with_capacity(spec.n_steps); probes.len()]);
        let mut field = spec.field_dft.then(|| vec![Complex64::new(0.0, 0.0); npts]);
        let mut loss_e = vec![0.0; if spec.audit { npts } else { 0 }];
        let mut loss_hx = vec![0.0; if spec.audit { state.hx.len() } else { 0 }];
        let mut loss_hy = vec![0.0; if spec.audit { state.hy.len() } else { 0 }];
        let mut source_power = 0.0;
        let mut energy = Vec::new();
        let mut snapshots = Vec::new();
        let start = state.step;

        for n in 0..spec.n_steps {
            let in_window = n >= w0 && n < w1;
            let track = in_window && spec.audit;
            let (ez0, hx0, hy0, px0, py0) = if track {
                (
                    state.ez.clone(),
                    state.hx.clone(),
                    state.hy.clone(),
                    state.pml_ezx.clone(),
                    state.pml_ezy.clone(),
                )
            } else {
                Default::default()
            };
            self.update_h(state);
            if track {
                for (k, (h0, h1)) in hx0.iter().zip(&state.hx).enumerate() {
                    let m = 0.5 * (h0 + h1);
                    loss_hx[k] += self.hx.sigma(k) * m * m;
                }
                for (k, (h0, h1)) in hy0.iter().zip(&state.hy).enumerate() {
                    let m = 0.5 * (h0 + h1);
                    loss_hy[k] += self.hy.sigma(k) * m * m;
                }
            }
            self.update_e(state);
            state.step += 1;
            let values = Self::source_values(sources, state.step as f64 * self.dt);
            if track {
                for (src, &v) in sources.iter().zip(&values) {
                    for &(k, w) in &src.taps {
                        if self.is_active(k) {
                            let add = v * w;
                            let mean = ez0[k] + 0.5 * add + 0.5 * (state.ez[k] - ez0[k]);
                            source_power += eps / self.dt * add * mean * area;
                        }
                    }
                }
            }
            self.apply_sources(state, sources, &values);
            if track {
                for k in 0..npts {
                    let s = self.e.sigma(k);
                    if s != 0.0 {
                        let m = 0.5 * (ez0[k] + state.ez[k]);
                        loss_e[k] += s * m * m;
                    }
                }
                for (p, node) in self.pml.iter().enumerate() {
                    let mx = 0.5 * (px0[p] + state.pml_ezx[p]);
                    let my = 0.5 * (py0[p] + state.pml_ezy[p]);
                    loss_e[node.k] += (node.x.sigma * mx + node.y.sigma * my) * (mx + my);
                }
            }

            if in_window {
                let ph = Complex64::from_polar(1.0, -omega * state.step as f64 * self.dt);
                for (acc, p) in state.probe_accumulators.iter_mut().zip(probes) {
                    *acc += ph * Self::probe_value(&state.ez, p);
                }
                if let Some(f) = field.as_mut() {
                    f.par_iter_mut()
                        .zip(state.ez.par_iter())
                        .with_min_len(4096)
                        .for_each(|(a, e)| *a += ph * *e);
                }
            }
            if let Some(rec) = series.as_mut() {
                for (r, p) in rec.iter_mut().zip(probes) {
                    r.push(Self::probe_value(&state.ez, p));
                }
            }
            if let Some(every) = spec.energy_every {
                if every > 0 && (n + 1) % every == 0 {
                    energy.push((state.step, self.energy(state)));
                }
            }
            if let Some(every) = spec.snapshot_every {
                if every > 0 && (n + 1) % every == 0 {
                    snapshots.push((state.step, state.ez.clone()));
                }
            }
            if (n + 1) % 64 == 0 || n + 1 == spec.n_steps {
                let probe: f64 = state.ez.iter().step_by(7).sum();
                if !probe.is_finite() {
                    return Err(Error::NonFinite { step: state.step });
                }
            }
        }

        let count = (w1 - w0).max(1) as f64;
        let scale = 2.0 / count;
        let probe_phasors = state.probe_accumulators.iter().map(|a| a * scale).collect();
        let audit = spec.audit.then(|| {
            let mut a = PowerAudit {
                source: source_power / count,
                ..Default::default()
            };
            let nx = grid.nx;
            for (k, l) in loss_e.iter().enumerate() {
                if *l != 0.0 {
                    *a.losses.entry(grid.regions[k]).or_default() += l * area / count;
                }
            }
            // magnetic loss is booked to the lossier neighbouring node
            let pick = |p: usize, q: usize| {
                if grid.sigma_m[q] > grid.sigma_m[p] {
                    grid.regions[q]
                } else {
                    grid.regions[p]
                }
            };
            for (k, l) in loss_hx.iter().enumerate() {
                if *l != 0.0 {
                    *a.losses.entry(pick(k, k + nx)).or_default() += l * area / count;
                }
            }
            for (k, l) in loss_hy.iter().enumerate() {
                if *l != 0.0 {
                    let (i, j) = (k % (nx - 1), k / (nx - 1));
                    let e = j * nx + i;
                    *a.losses.entry(pick(e, e + 1)).or_default() += l * area / count;
                }
            }
            a
        });
        Ok(RunOutput {
            dt: self.dt,
            n_steps: state.step - start,
            window: (w0, w1),
            probe_phasors,
            probe_series: series,
            field_phasor: field.map(|f| f.into_iter().map(|v| v * scale).collect()),
            audit,
            energy,
            snapshots,
        })
    }
}

/// Largest `end <= max_end` such that `[start, end)` spans a whole number of periods (at least one).
pub fn whole_period_window(start: usize, max_end: usize, dt: f64, freq: f64) -> (usize, usize) {
    let per = 1.0 / (freq * dt);
    let periods = ((max_end.saturating_sub(start)) as f64 / per).floor().max(1.0);
    let end = start + (periods * per).round() as usize;
    (start, end.min(max_end.max(start + 1)))
}

/// Single-frequency DFT of a uniformly sampled series, scaled so a pure cosine of amplitude A returns A.
///
/// Sample `k` of `series` is taken at time `(first_step + k) * dt`. The series must span at least
/// five carrier periods.
pub fn dft_phasor(series: &[f64], dt: f64, freq: f64, first_step: usize) -> Result<Complex64> {
    let periods = series.len() as f64 * dt * freq;
    if !(periods >= 5.0 - 1e-9) {
        return Err(Error::Invalid(format!(
            "DFT window of {periods:.2} periods is shorter than 5"
        )));
    }
    let omega = 2.0 * PI * freq;
    let sum: Complex64 = series
        .iter()
        .enumerate()
        .map(|(k, v)| Complex64::from_polar(*v, -omega * (first_step + k) as f64 * dt))
        .sum();
    Ok(sum * (2.0 / series.len() as f64))
}
