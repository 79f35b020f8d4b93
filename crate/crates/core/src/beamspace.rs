//! Two-user uplink over a clustered multipath channel seen through the lens beam ports.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingTable, CouplingVector};
use crate::error::{Error, Result};
use crate::geometry_csv::fmt_f64;
use crate::material::free_space_wavelength;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub n_clusters: usize,
    pub n_subpaths: usize,
    /// Full width of the sub-path spread around a cluster centre (rad).
    pub cluster_angle_spread: f64,
    /// Angular range of the scatterers (rad).
    pub scan_range: (f64, f64),
    pub carrier: f64,
    pub element_spacing: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            n_clusters: 4,
            n_subpaths: 5,
            cluster_angle_spread: 5f64.to_radians(),
            scan_range: (-FRAC_PI_2, FRAC_PI_2),
            carrier: 28e9,
            element_spacing: free_space_wavelength(28e9) / 2.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 {
            return Err(Error::config("system.n_clusters", "must be >= 1"));
        }
        if self.n_subpaths == 0 {
            return Err(Error::config("system.n_subpaths", "must be >= 1"));
        }
        let (lo, hi) = self.scan_range;
        if !(lo >= -FRAC_PI_2 && hi <= FRAC_PI_2 && lo < hi) {
            return Err(Error::config("system.scan_range_deg", "must be an increasing pair within [-90, 90]"));
        }
        if !(self.cluster_angle_spread >= 0.0 && self.cluster_angle_spread < hi - lo) {
            return Err(Error::config(
                "system.cluster_angle_spread_deg",
                "must be non-negative and narrower than the scan range",
            ));
        }
        if !(self.carrier > 0.0) {
            return Err(Error::config("system.carrier", "must be > 0"));
        }
        if !(self.element_spacing > 0.0) {
            return Err(Error::config("system.element_spacing", "must be > 0"));
        }
        Ok(())
    }

    pub fn n_paths(&self) -> usize {
        self.n_clusters * self.n_subpaths
    }
}

/// Distance-law attenuation with log-normal shadowing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeScaleParams {
    /// Distance at which the attenuation is one, i.e. where the nominal SNR holds (m).
    pub reference_distance: f64,
    pub exponent: f64,
    pub shadow_std_db: f64,
    /// User distances are uniform over this range (m).
    pub distance_range: (f64, f64),
}

impl Default for LargeScaleParams {
    fn default() -> Self {
        LargeScaleParams {
            reference_distance: 20.0,
            exponent: 3.0,
            shadow_std_db: 4.0,
            distance_range: (20.0, 100.0),
        }
    }
}

impl LargeScaleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.exponent > 0.0) {
            return Err(Error::config("system.pathloss_exponent", "must be > 0"));
        }
        if !(self.reference_distance > 0.0) {
            return Err(Error::config("system.reference_distance", "must be > 0"));
        }
        let (a, b) = self.distance_range;
        if !(a > 0.0 && b >= a) {
            return Err(Error::config("system.distance_range", "must be positive and increasing"));
        }
        if !(self.shadow_std_db >= 0.0) {
            return Err(Error::config("system.shadow_std_db", "must be >= 0"));
        }
        Ok(())
    }

    /// Linear power attenuation at `distance` with a shadowing draw of `shadow_db`.
    pub fn coefficient(&self, distance: f64, shadow_db: f64) -> f64 {
        (distance / self.reference_distance).powf(-self.exponent) * 10f64.powf(shadow_db / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub angle: f64,
    pub gain: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserChannel {
    pub paths: Vec<PathComponent>,
    pub large_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub users: Vec<UserChannel>,
}

/// Draw one realization per user.
///
/// Cluster centres are uniform over the part of the scan range that keeps every sub-path
/// inside it; sub-paths are spread uniformly around the centre.
pub fn draw_channel<R: Rng + ?Sized>(
    params: &ChannelParams,
    large: &LargeScaleParams,
    n_users: usize,
    rng: &mut R,
) -> ChannelRealization {
    let half = params.cluster_angle_spread / 2.0;
    let (lo, hi) = params.scan_range;
    let sd = (0.5 / params.n_paths() as f64).sqrt();
    let shadow = Normal::new(0.0, large.shadow_std_db).expect("validated shadow std");
    let users = (0..n_users)
        .map(|_| {
            let mut paths = Vec::with_capacity(params.n_paths());
            for _ in 0..params.n_clusters {
                let centre = rng.random_range(lo + half..=hi - half);
                for _ in 0..params.n_subpaths {
                    let offset = if half > 0.0 { rng.random_range(-half..=half) } else { 0.0 };
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    paths.push(PathComponent {
                        angle: (centre + offset).clamp(lo, hi),
                        gain: Complex64::new(re * sd, im * sd),
                    });
                }
            }
            let (a, b) = large.distance_range;
            let d = if b > a { rng.random_range(a..=b) } else { a };
            UserChannel {
                paths,
                large_scale: large.coefficient(d, shadow.sample(rng)),
            }
        })
        .collect();
    ChannelRealization { users }
}

/// Generator for trial `trial` of a run seeded with `seed`; independent of execution order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Far-field response of an `n`-element uniform linear array centred on the origin.
pub fn steering_vector(theta: f64, n: usize, params: &ChannelParams) -> Vec<Complex64> {
    let k0 = 2.0 * std::f64::consts::PI * params.carrier / crate::material::C0;
    let mid = (n as f64 - 1.0) / 2.0;
    (0..n)
        .map(|i| {
            let y = (i as f64 - mid) * params.element_spacing;
            Complex64::from_polar(1.0, -k0 * y * theta.sin())
        })
        .collect()
}

/// One-hot response on the port whose design angle is nearest in sine.
pub fn ideal_coupling(theta: f64, beam_angles: &[f64]) -> CouplingVector {
    let s = theta.sin();
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, b) in beam_angles.iter().enumerate() {
        let d = (b.sin() - s).abs();
        // near-equal distances count as a tie, which goes to the lower port
        if d < best_d - 1e-12 {
            best = i;
            best_d = d;
        }
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); beam_angles.len()];
    if !amps.is_empty() {
        amps[best] = Complex64::new(1.0, 0.0);
    }
    CouplingVector::from_parts(theta, amps, Vec::new())
}

/// Lens response used by the system simulation.
#[derive(Debug, Clone)]
pub enum LensResponse {
    Ideal { beam_angles: Vec<f64> },
    /// Interpolated absolute transmission, scaled so broadside carries unit power.
    Aberrated { table: CouplingTable, scale: f64 },
}

impl LensResponse {
    pub fn ideal(beam_angles: Vec<f64>) -> Self {
        LensResponse::Ideal { beam_angles }
    }

    /// Calibrate the table against the ideal model with a single broadside path.
    pub fn aberrated(table: CouplingTable) -> Result<Self> {
        let v = table.interpolate(0.0)?;
        let p: f64 = v.transmission().iter().map(|a| a.norm_sqr()).sum();
        if !(p > 0.0) {
            return Err(Error::Degenerate("coupling table has no broadside power".into()));
        }
        Ok(LensResponse::Aberrated {
            table,
            scale: 1.0 / p.sqrt(),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LensResponse::Ideal { .. } => "ideal",
            LensResponse::Aberrated { .. } => "aberrated",
        }
    }

    pub fn n_beam(&self) -> usize {
        match self {
            LensResponse::Ideal { beam_angles } => beam_angles.len(),
            LensResponse::Aberrated { table, .. } => table.n_beam(),
        }
    }

    pub fn response(&self, theta: f64) -> Result<Vec<Complex64>> {
        match self {
            LensResponse::Ideal { beam_angles } => {
                Ok(ideal_coupling(theta, beam_angles).beam_amplitudes)
            }
            LensResponse::Aberrated { table, scale } => Ok(table
                .interpolate(theta)?
                .transmission()
                .into_iter()
                .map(|a| a * *scale)
                .collect()),
        }
    }
}

/// Beam-port channel of every user: `sqrt(large_scale) * sum(gain * response(angle))`.
pub fn effective_channel(
    realization: &ChannelRealization,
    lens: &LensResponse,
) -> Result<Vec<Vec<Complex64>>> {
    let n = lens.n_beam();
    realization
        .users
        .iter()
        .map(|u| {
            let mut h = vec![Complex64::new(0.0, 0.0); n];
            for p in &u.paths {
                let s = lens.response(p.angle)?;
                for (hi, si) in h.iter_mut().zip(&s) {
                    *hi += p.gain * si;
                }
            }
            let a = u.large_scale.sqrt();
            Ok(h.into_iter().map(|x| x * a).collect())
        })
        .collect()
}

/// Switch one port to each user: the strongest port not already taken by a lower-numbered user.
pub fn select_ports(channels: &[Vec<Complex64>], n_chains: usize) -> Result<Vec<usize>> {
    let users = channels.len();
    if n_chains < users {
        return Err(Error::Invalid(format!("{n_chains} RF chains for {users} users")));
    }
    let n_ports = channels.first().map_or(0, |h| h.len());
    if n_ports < users {
        return Err(Error::Invalid(format!("{n_ports} ports for {users} users")));
    }
    let mut taken = Vec::with_capacity(users);
    for h in channels {
        let mut best: Option<usize> = None;
        for (p, v) in h.iter().enumerate() {
            if taken.contains(&p) {
                continue;
            }
            if best.is_none_or(|b| v.norm_sqr() > h[b].norm_sqr()) {
                best = Some(p);
            }
        }
        taken.push(best.expect("enough ports"));
    }
    Ok(taken)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinerOutput {
    pub desired: f64,
    pub interference: f64,
    /// Set when the user's restricted channel is zero.
    pub degenerate: bool,
}

/// Maximum-ratio combining over the selected ports, powers relative to `noise_power`.
pub fn mr_combine(
    channels: &[Vec<Complex64>],
    ports: &[usize],
    noise_power: f64,
) -> Result<Vec<CombinerOutput>> {
    let n_ports = channels.first().map_or(0, |h| h.len());
    if let Some(&p) = ports.iter().find(|&&p| p >= n_ports) {
        return Err(Error::IndexOutOfRange {
            what: "port",
            index: p,
            len: n_ports,
        });
    }
    if !(noise_power > 0.0) {
        return Err(Error::Invalid("noise power must be positive".into()));
    }
    let restricted: Vec<Vec<Complex64>> = channels
        .iter()
        .map(|h| ports.iter().map(|&p| h[p]).collect())
        .collect();
    let inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };
    Ok(restricted
        .iter()
        .enumerate()
        .map(|(u, w)| {
            let own = inner(w, w).re;
            if own == 0.0 {
                return CombinerOutput {
                    desired: 0.0,
                    interference: 0.0,
                    degenerate: true,
                };
            }
            let interference = restricted
                .iter()
                .enumerate()
                .filter(|(v, _)| *v != u)
                .map(|(_, hv)| inner(w, hv).norm_sqr())
                .sum::<f64>();
            CombinerOutput {
                desired: own * own / noise_power,
                interference: interference / noise_power,
                degenerate: false,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub channel: ChannelParams,
    pub large_scale: LargeScaleParams,
    pub n_users: usize,
    pub n_chains: usize,
    pub snr_db: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            channel: ChannelParams::default(),
            large_scale: LargeScaleParams::default(),
            n_users: 2,
            n_chains: 2,
            snr_db: 0.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.large_scale.validate()?;
        if self.n_users == 0 {
            return Err(Error::config("system.n_users", "must be >= 1"));
        }
        if self.n_chains < self.n_users {
            return Err(Error::config("system.n_chains", "must be at least the number of users"));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::config("system.snr_db", "must be finite"));
        }
        Ok(())
    }

    pub fn noise_power(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSamples {
    pub desired: Vec<f64>,
    pub interference: Vec<f64>,
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub model: String,
    pub users: Vec<UserSamples>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Desired,
    Interference,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Desired => "desired",
            Metric::Interference => "interference",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemResult {
    pub seed: u64,
    pub n_trials: usize,
    pub models: Vec<ModelResult>,
}

impl SystemResult {
    pub fn model(&self, name: &str) -> Option<&ModelResult> {
        self.models.iter().find(|m| m.model == name)
    }

    /// Median over all users' samples of one model.
    pub fn median(&self, model: &str, metric: Metric) -> Option<f64> {
        let m = self.model(model)?;
        let mut v: Vec<f64> = m
            .users
            .iter()
            .flat_map(|u| match metric {
                Metric::Desired => u.desired.iter(),
                Metric::Interference => u.interference.iter(),
            })
            .copied()
            .collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Some(if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        })
    }

    /// `model,user,metric,value_linear,value_db`, one row per sample.
    pub fn results_csv(&self) -> String {
        let mut s = String::from("model,user,metric,value_linear,value_db\n");
        for m in &self.models {
            for (u, us) in m.users.iter().enumerate() {
                for (metric, vals) in [(Metric::Desired, &us.desired), (Metric::Interference, &us.interference)] {
                    for v in vals {
                        s.push_str(&format!(
                            "{},{},{},{},{}\n",
                            m.model,
                            u + 1,
                            metric.name(),
                            fmt_f64(*v),
                            fmt_f64(to_db(*v))
                        ));
                    }
                }
            }
        }
        s
    }

    /// `model,user,metric,value_db,probability`.
    pub fn cdf_csv(&self) -> String {
        let mut s = String::from("model,user,metric,value_db,probability\n");
        for m in &self.models {
            for (u, us) in m.users.iter().enumerate() {
                for (metric, vals) in [(Metric::Desired, &us.desired), (Metric::Interference, &us.interference)] {
                    let db: Vec<f64> = vals.iter().map(|v| to_db(*v)).collect();
                    for (v, p) in empirical_cdf(&db).unwrap_or_default() {
                        s.push_str(&format!(
                            "{},{},{},{},{}\n",
                            m.model,
                            u + 1,
                            metric.name(),
                            fmt_f64(v),
                            fmt_f64(p)
                        ));
                    }
                }
            }
        }
        s
    }

    pub fn write(&self, results: &Path, cdf: &Path) -> Result<()> {
        fs::write(results, self.results_csv()).map_err(|e| Error::io(results, e))?;
        fs::write(cdf, self.cdf_csv()).map_err(|e| Error::io(cdf, e))
    }
}

fn to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// Paired trials: every lens model sees the same channel draws.
pub fn monte_carlo(
    params: &SystemParams,
    lenses: &[LensResponse],
    n_trials: usize,
    seed: u64,
) -> Result<SystemResult> {
    params.validate()?;
    if n_trials == 0 {
        return Err(Error::Invalid("need at least one trial".into()));
    }
    if lenses.is_empty() {
        return Err(Error::Invalid("no lens model given".into()));
    }
    let noise = params.noise_power();
    let per_trial: Vec<Vec<Vec<CombinerOutput>>> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let real = draw_channel(&params.channel, &params.large_scale, params.n_users, &mut rng);
            lenses
                .iter()
                .map(|lens| {
                    let h = effective_channel(&real, lens)?;
                    let ports = select_ports(&h, params.n_chains)?;
                    mr_combine(&h, &ports, noise)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let models = lenses
        .iter()
        .enumerate()
        .map(|(li, lens)| ModelResult {
            model: lens.name().to_string(),
            users: (0..params.n_users)
                .map(|u| {
                    let outs = per_trial.iter().map(|t| t[li][u]);
                    UserSamples {
                        desired: outs.clone().map(|o| o.desired).collect(),
                        interference: outs.clone().map(|o| o.interference).collect(),
                        degenerate: outs.filter(|o| o.degenerate).count(),
                    }
                })
                .collect(),
        })
        .collect();
    Ok(SystemResult {
        seed,
        n_trials,
        models,
    })
}

/// Sorted samples with probabilities `i / N`.
pub fn empirical_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::Invalid("empty sample set".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    Ok(v
        .into_iter()
        .enumerate()
        .map(|(i, x)| (x, (i + 1) as f64 / n))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn beam_angles() -> Vec<f64> {
        // sines evenly spaced, as for the reference lens
        (0..13)
            .map(|i| ((i as f64 - 6.0) / 6.0 * 50f64.to_radians().sin()).asin())
            .collect()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ideal_coupling_examples() {
        let b = beam_angles();
        let v = ideal_coupling(0.0, &b);
        assert_eq!(v.peak_port, 7);
        assert_eq!(v.powers().iter().sum::<f64>(), 1.0);
        let mid = (0.5 * (b[6].sin() + b[7].sin())).asin();
        assert_eq!(ideal_coupling(mid, &b).peak_port, 7);
        assert_eq!(ideal_coupling(mid + 1e-6, &b).peak_port, 8);
        assert_eq!(ideal_coupling(FRAC_PI_2, &b).peak_port, 13);
    }

    #[test]
    fn draw_counts_and_determinism() {
        let p = ChannelParams::default();
        let l = LargeScaleParams::default();
        let a = draw_channel(&p, &l, 2, &mut trial_rng(7, 3));
        let b = draw_channel(&p, &l, 2, &mut trial_rng(7, 3));
        let other = draw_channel(&p, &l, 2, &mut trial_rng(7, 4));
        assert_eq!(a, b);
        assert_ne!(a, other);
        assert_eq!(a.users.len(), 2);
        for u in &a.users {
            assert_eq!(u.paths.len(), 20);
            assert!(u.paths.iter().all(|q| q.angle.abs() <= FRAC_PI_2));
            assert!(u.large_scale > 0.0);
        }
    }

    #[test]
    fn mean_path_power_is_one() {
        let p = ChannelParams::default();
        let l = LargeScaleParams::default();
        let n = 100_000;
        let mut rng = trial_rng(11, 0);
        let mut total = 0.0;
        for _ in 0..n {
            let r = draw_channel(&p, &l, 1, &mut rng);
            total += r.users[0].paths.iter().map(|q| q.gain.norm_sqr()).sum::<f64>();
        }
        let mean = total / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn single_broadside_path_is_scaled_one_hot() {
        let lens = LensResponse::ideal(beam_angles());
        let g = c(0.3, -0.4);
        let real = ChannelRealization {
            users: vec![UserChannel {
                paths: vec![PathComponent { angle: 0.0, gain: g }],
                large_scale: 4.0,
            }],
        };
        let h = effective_channel(&real, &lens).unwrap();
        for (p, v) in h[0].iter().enumerate() {
            let want = if p == 6 { g * 2.0 } else { c(0.0, 0.0) };
            assert_eq!(*v, want);
        }
    }

    #[test]
    fn two_paths_superpose() {
        let lens = LensResponse::ideal(beam_angles());
        let b = beam_angles();
        let real = ChannelRealization {
            users: vec![UserChannel {
                paths: vec![
                    PathComponent { angle: b[2], gain: c(1.0, 0.0) },
                    PathComponent { angle: b[9], gain: c(0.0, 2.0) },
                ],
                large_scale: 1.0,
            }],
        };
        let h = &effective_channel(&real, &lens).unwrap()[0];
        assert_eq!(h[2], c(1.0, 0.0));
        assert_eq!(h[9], c(0.0, 2.0));
        assert_eq!(h.iter().filter(|v| v.norm() > 0.0).count(), 2);
    }

    #[test]
    fn port_selection_rules() {
        let h1 = vec![c(1.0, 0.0), c(3.0, 0.0), c(2.0, 0.0)];
        let h2 = vec![c(2.0, 0.0), c(0.5, 0.0), c(1.0, 0.0)];
        assert_eq!(select_ports(&[h1.clone(), h2], 2).unwrap(), vec![1, 0]);
        let h2 = vec![c(0.1, 0.0), c(5.0, 0.0), c(1.0, 0.0)];
        assert_eq!(select_ports(&[h1.clone(), h2], 2).unwrap(), vec![1, 2]);
        assert!(select_ports(&[h1.clone(), h1.clone()], 1).is_err());
        assert!(select_ports(&[vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]], 2).is_err());
    }

    #[test]
    fn combiner_examples() {
        let a = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let b = vec![c(0.0, 0.0), c(0.0, 2.0)];
        let out = mr_combine(&[a.clone(), b], &[0, 1], 1.0).unwrap();
        assert_eq!(out[0].interference, 0.0);
        assert_eq!(out[0].desired, 1.0);
        assert_eq!(out[1].desired, 16.0);
        let out = mr_combine(&[a.clone(), a.clone()], &[0, 1], 1.0).unwrap();
        assert_eq!(out[0].desired, out[0].interference);
        let z = vec![c(0.0, 0.0); 2];
        let out = mr_combine(&[z, a.clone()], &[0, 1], 1.0).unwrap();
        assert!(out[0].degenerate && out[0].desired == 0.0);
        assert!(mr_combine(&[a.clone(), a], &[0, 5], 1.0).is_err());
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(empirical_cdf(&[5.0]).unwrap(), vec![(5.0, 1.0)]);
        let probs: Vec<f64> = empirical_cdf(&[4.0, 2.0, 1.0, 3.0]).unwrap().iter().map(|x| x.1).collect();
        assert_eq!(probs, vec![0.25, 0.5, 0.75, 1.0]);
        assert!(empirical_cdf(&[]).is_err());
    }

    #[test]
    fn steering_vector_matches_ramp() {
        let p = ChannelParams::default();
        let a = steering_vector(0.3, 5, &p);
        let step = -std::f64::consts::PI * 0.3f64.sin();
        for w in a.windows(2) {
            assert!(((w[1] / w[0]).arg() - step).abs() < 1e-9);
        }
    }

    #[test]
    fn monte_carlo_pairs_models() {
        let sp = SystemParams::default();
        let ideal = LensResponse::ideal(beam_angles());
        let r = monte_carlo(&sp, &[ideal.clone(), ideal], 50, 3).unwrap();
        assert_eq!(r.models[0].users, r.models[1].users);
        assert_eq!(r.models[0].users[0].desired.len(), 50);
    }

    fn channel() -> impl Strategy<Value = Vec<Complex64>> {
        proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 4..14)
            .prop_map(|v| v.into_iter().map(|(a, b)| c(a, b)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn cdf_is_valid(v in proptest::collection::vec(-50.0f64..50.0, 1..200)) {
            let cdf = empirical_cdf(&v).unwrap();
            let n = v.len() as f64;
            prop_assert!((cdf[0].1 - 1.0 / n).abs() < 1e-15);
            prop_assert_eq!(cdf.last().unwrap().1, 1.0);
            for w in cdf.windows(2) {
                prop_assert!(w[1].0 >= w[0].0 && w[1].1 > w[0].1);
            }
        }

        #[test]
        fn cdf_invariant_under_duplication(v in proptest::collection::vec(-50.0f64..50.0, 1..100)) {
            let once = empirical_cdf(&v).unwrap();
            let mut twice_in = v.clone();
            twice_in.extend_from_slice(&v);
            let twice = empirical_cdf(&twice_in).unwrap();
            // value at every probability level is unchanged
            for (i, (x, p)) in once.iter().enumerate() {
                let j = 2 * i + 1;
                prop_assert_eq!(twice[j].0, *x);
                prop_assert!((twice[j].1 - p).abs() < 1e-15);
            }
        }

        #[test]
        fn selection_invariant_under_positive_scaling(h1 in channel(), s1 in 0.01f64..100.0, s2 in 0.01f64..100.0, perm in any::<u64>()) {
            let n = h1.len();
            let mut h2 = h1.clone();
            h2.rotate_left((perm as usize) % n);
            let base = select_ports(&[h1.clone(), h2.clone()], 2).unwrap();
            let scaled = select_ports(
                &[h1.iter().map(|x| x * s1).collect(), h2.iter().map(|x| x * s2).collect()],
                2,
            ).unwrap();
            let p1: Vec<f64> = h1.iter().map(|x| x.norm_sqr()).collect();
            let top = p1.iter().cloned().fold(0.0, f64::max);
            prop_assume!(p1.iter().filter(|x| **x > top * (1.0 - 1e-9)).count() == 1);
            prop_assert_eq!(base, scaled);
        }

        #[test]
        fn selection_matches_exhaustive_search(h1 in channel(), perm in any::<u64>()) {
            let n = h1.len();
            let mut h2 = h1.clone();
            h2.rotate_left((perm as usize) % n);
            let got = select_ports(&[h1.clone(), h2.clone()], 2).unwrap();
            // user 1 takes its best port, user 2 its best of the rest
            let mut best: Option<(usize, usize)> = None;
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    let key = |(x, y): (usize, usize)| (h1[x].norm_sqr(), h2[y].norm_sqr());
                    let better = match best {
                        None => true,
                        Some(cur) => {
                            let (k1, k2) = key((a, b));
                            let (c1, c2) = key(cur);
                            k1 > c1 || (k1 == c1 && (k2 > c2))
                        }
                    };
                    if better {
                        best = Some((a, b));
                    }
                }
            }
            let (a, b) = best.unwrap();
            prop_assert_eq!(h1[got[0]].norm_sqr(), h1[a].norm_sqr());
            prop_assert_eq!(h2[got[1]].norm_sqr(), h2[b].norm_sqr());
        }

        #[test]
        fn combiner_matches_direct_formula(h in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 4)) {
            let h1 = vec![c(h[0].0, h[0].1), c(h[1].0, h[1].1)];
            let h2 = vec![c(h[2].0, h[2].1), c(h[3].0, h[3].1)];
            let out = mr_combine(&[h1.clone(), h2.clone()], &[0, 1], 1.0).unwrap();
            let n1 = h1[0].norm_sqr() + h1[1].norm_sqr();
            let x = h1[0].conj() * h2[0] + h1[1].conj() * h2[1];
            let d = n1 * n1;
            prop_assert!((out[0].desired - d).abs() <= 1e-12 * d.max(1.0));
            prop_assert!((out[0].interference - x.norm_sqr()).abs() <= 1e-12 * x.norm_sqr().max(1.0));
        }

        #[test]
        fn channel_is_linear_in_gains(seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let lens = LensResponse::ideal(beam_angles());
            let real = draw_channel(&ChannelParams::default(), &LargeScaleParams::default(), 2, &mut trial_rng(seed, 0));
            let k = c(re, im);
            let mut scaled = real.clone();
            for u in &mut scaled.users {
                for p in &mut u.paths {
                    p.gain *= k;
                }
            }
            let a = effective_channel(&real, &lens).unwrap();
            let b = effective_channel(&scaled, &lens).unwrap();
            for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
                prop_assert!((x * k - y).norm() <= 1e-12 * (x.norm() * k.norm()).max(1e-300));
            }
        }
    }
}
