//! Run configuration shared by every command: one JSON document, angles in degrees.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::beamspace::{ChannelParams, LargeScaleParams, SystemParams};
use crate::coupling::FdtdConfig;
use crate::error::{Error, Result};
use crate::lens::{LensDesignParams, WavelengthConvention};
use crate::material::free_space_wavelength;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LensSection {
    /// Which wavelength `f1_wavelengths` and `taper_wavelengths` count.
    pub wavelength: WavelengthConvention,
    pub f1_wavelengths: f64,
    pub beta: f64,
    pub alpha_deg: f64,
    pub phi_max_deg: f64,
    pub theta_max_deg: f64,
    pub n_beam: usize,
    pub n_array: usize,
    pub n_dummy: usize,
    pub taper_wavelengths: f64,
    pub freq: f64,
    pub eps_r: f64,
    pub tan_delta: f64,
    pub substrate_h: f64,
    /// Defaults to half a free-space wavelength.
    pub element_spacing: Option<f64>,
    /// In guided wavelengths.
    pub septum_wavelengths: f64,
    pub eps_eff: Option<f64>,
}

impl Default for LensSection {
    fn default() -> Self {
        LensSection {
            wavelength: WavelengthConvention::FreeSpace,
            f1_wavelengths: 5.0,
            beta: 0.9,
            alpha_deg: 30.0,
            phi_max_deg: 30.0,
            theta_max_deg: 50.0,
            n_beam: 13,
            n_array: 13,
            n_dummy: 2,
            taper_wavelengths: 3.0,
            freq: 28e9,
            eps_r: 6.15,
            tan_delta: 0.0038,
            substrate_h: 0.64e-3,
            element_spacing: None,
            septum_wavelengths: 0.1,
            eps_eff: None,
        }
    }
}

impl LensSection {
    pub fn params(&self) -> Result<LensDesignParams> {
        let mut p = LensDesignParams {
            f1: 1.0,
            beta: self.beta,
            alpha: self.alpha_deg.to_radians(),
            phi_max: self.phi_max_deg.to_radians(),
            theta_max: self.theta_max_deg.to_radians(),
            n_beam: self.n_beam,
            n_array: self.n_array,
            n_dummy: self.n_dummy,
            taper_len: 1.0,
            freq: self.freq,
            eps_r: self.eps_r,
            tan_delta: self.tan_delta,
            substrate_h: self.substrate_h,
            element_spacing: self
                .element_spacing
                .unwrap_or_else(|| free_space_wavelength(self.freq) / 2.0),
            septum: 0.0,
            eps_eff_override: self.eps_eff,
        };
        // wavelength-derived lengths need a valid frequency and permittivity first
        p.validate().map_err(|e| prefix("lens", e))?;
        let lambda = p.design_wavelength(self.wavelength);
        p.f1 = self.f1_wavelengths * lambda;
        p.taper_len = self.taper_wavelengths * lambda;
        p.septum = self.septum_wavelengths * p.guided_wavelength();
        p.validate().map_err(|e| match e {
            Error::Config { key, msg } if key == "f1" => Error::config("lens.f1_wavelengths", msg),
            Error::Config { key, msg } if key == "taper_len" => {
                Error::config("lens.taper_wavelengths", msg)
            }
            Error::Config { key, msg } if key == "septum" => {
                Error::config("lens.septum_wavelengths", msg)
            }
            other => prefix("lens", other),
        })?;
        Ok(p)
    }
}

fn prefix(section: &str, e: Error) -> Error {
    match e {
        Error::Config { key, msg } if !key.contains('.') => {
            Error::config(format!("{section}.{key}"), msg)
        }
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Explicit DoA list; takes precedence over the grid.
    pub doas_deg: Option<Vec<f64>>,
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            doas_deg: None,
            start_deg: -90.0,
            stop_deg: 90.0,
            step_deg: 2.5,
        }
    }
}

impl SweepSection {
    /// DoAs in radians, increasing.
    pub fn doas(&self) -> Result<Vec<f64>> {
        let deg = match &self.doas_deg {
            Some(list) => list.clone(),
            None => {
                if !(self.step_deg > 0.0) {
                    return Err(Error::config("sweep.step_deg", "must be > 0"));
                }
                if !(self.stop_deg >= self.start_deg) {
                    return Err(Error::config("sweep.stop_deg", "must not be below start_deg"));
                }
                let n = ((self.stop_deg - self.start_deg) / self.step_deg + 1e-9).floor() as usize;
                (0..=n).map(|i| self.start_deg + i as f64 * self.step_deg).collect()
            }
        };
        if deg.is_empty() {
            return Err(Error::config("sweep.doas_deg", "must not be empty"));
        }
        if deg.iter().any(|d| !(d.abs() <= 90.0)) {
            return Err(Error::config("sweep.doas_deg", "angles must lie in [-90, 90]"));
        }
        if deg.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("sweep.doas_deg", "must be strictly increasing"));
        }
        Ok(deg.into_iter().map(f64::to_radians).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub n_users: usize,
    pub n_chains: usize,
    pub n_clusters: usize,
    pub n_subpaths: usize,
    pub cluster_angle_spread_deg: f64,
    pub scan_range_deg: (f64, f64),
    /// Defaults to the lens design frequency.
    pub carrier: Option<f64>,
    /// Defaults to the lens element spacing.
    pub element_spacing: Option<f64>,
    pub reference_distance: f64,
    pub pathloss_exponent: f64,
    pub shadow_std_db: f64,
    pub distance_range: (f64, f64),
    pub snr_db: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SystemSection {
    fn default() -> Self {
        let l = LargeScaleParams::default();
        let c = ChannelParams::default();
        SystemSection {
            n_users: 2,
            n_chains: 2,
            n_clusters: c.n_clusters,
            n_subpaths: c.n_subpaths,
            cluster_angle_spread_deg: c.cluster_angle_spread.to_degrees(),
            scan_range_deg: (-90.0, 90.0),
            carrier: None,
            element_spacing: None,
            reference_distance: l.reference_distance,
            pathloss_exponent: l.exponent,
            shadow_std_db: l.shadow_std_db,
            distance_range: l.distance_range,
            snr_db: 0.0,
            trials: 10_000,
            seed: 1,
        }
    }
}

impl SystemSection {
    pub fn params(&self, lens: &LensDesignParams) -> Result<SystemParams> {
        if self.trials == 0 {
            return Err(Error::config("system.trials", "must be >= 1"));
        }
        let p = SystemParams {
            channel: ChannelParams {
                n_clusters: self.n_clusters,
                n_subpaths: self.n_subpaths,
                cluster_angle_spread: self.cluster_angle_spread_deg.to_radians(),
                scan_range: (
                    self.scan_range_deg.0.to_radians(),
                    self.scan_range_deg.1.to_radians(),
                ),
                carrier: self.carrier.unwrap_or(lens.freq),
                element_spacing: self.element_spacing.unwrap_or(lens.element_spacing),
            },
            large_scale: LargeScaleParams {
                reference_distance: self.reference_distance,
                exponent: self.pathloss_exponent,
                shadow_std_db: self.shadow_std_db,
                distance_range: self.distance_range,
            },
            n_users: self.n_users,
            n_chains: self.n_chains,
            snr_db: self.snr_db,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    /// Also write the field phasor magnitude of `doa` runs.
    pub field_map: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: PathBuf::from("out"),
            field_map: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub lens: LensSection,
    pub fdtd: FdtdConfig,
    pub sweep: SweepSection,
    pub system: SystemSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let lens = self.lens.params()?;
        self.fdtd.validate()?;
        self.sweep.doas()?;
        self.system.params(&lens)?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Read and validate a config file; missing sections take their defaults.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::from_json(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lens::LensDesignParams;

    fn parse(s: &str) -> Result<RunConfig> {
        RunConfig::from_json(s, Path::new("run.json"))
    }

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("not a config error: {other}"),
        }
    }

    #[test]
    fn lens_only_fills_defaults() {
        let c = parse(r#"{"lens": {"beta": 0.9}}"#).unwrap();
        assert_eq!(c.fdtd, FdtdConfig::default());
        assert_eq!(c.system, SystemSection::default());
        assert_eq!(c.sweep, SweepSection::default());
    }

    #[test]
    fn default_lens_matches_reference_design() {
        let p = RunConfig::default().lens.params().unwrap();
        let r = LensDesignParams::reference_28ghz(WavelengthConvention::FreeSpace);
        assert!((p.f1 - r.f1).abs() < 1e-15);
        assert!((p.alpha - r.alpha).abs() < 1e-15);
        assert!((p.septum - r.septum).abs() < 1e-15);
        assert_eq!(p.n_beam, r.n_beam);
    }

    #[test]
    fn bad_beta_names_beta() {
        let e = parse(r#"{"lens": {"beta": 1.5}}"#).unwrap_err();
        assert!(key_of(e).ends_with("beta"));
    }

    #[test]
    fn unknown_key_reports_location() {
        let e = parse("{\n  \"lens\": {\n    \"betta\": 0.9\n  }\n}").unwrap_err();
        match e {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 3);
                assert!(msg.contains("betta"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn section_errors_are_keyed() {
        assert_eq!(key_of(parse(r#"{"fdtd": {"resolution": 5}}"#).unwrap_err()), "fdtd.resolution");
        assert_eq!(key_of(parse(r#"{"system": {"trials": 0}}"#).unwrap_err()), "system.trials");
        assert_eq!(
            key_of(parse(r#"{"sweep": {"doas_deg": [10, 0]}}"#).unwrap_err()),
            "sweep.doas_deg"
        );
        assert_eq!(
            key_of(parse(r#"{"lens": {"f1_wavelengths": -1}}"#).unwrap_err()),
            "lens.f1_wavelengths"
        );
    }

    #[test]
    fn round_trip_is_equal() {
        let c = parse(r#"{"lens": {"wavelength": "guided"}, "sweep": {"doas_deg": [0, 12.5, 26.5]}, "system": {"seed": 9}}"#)
            .unwrap();
        let back = parse(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn default_sweep_grid() {
        let d = SweepSection::default().doas().unwrap();
        assert_eq!(d.len(), 73);
        assert!((d[0] + std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((d[72] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn hash_changes_with_content() {
        let mut c = RunConfig::default();
        let h = c.hash();
        c.system.seed += 1;
        assert_ne!(c.hash(), h);
    }
}
