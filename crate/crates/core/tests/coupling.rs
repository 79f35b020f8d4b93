use std::path::PathBuf;

use rotman_core::coupling::{simulate_doa, CouplingTable, FdtdConfig, LensModel};
use rotman_core::lens::{synthesize, LensDesignParams, WavelengthConvention};

fn shipped_table() -> CouplingTable {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", "coupling_res20.csv"].iter().collect();
    CouplingTable::read(&path).unwrap()
}

#[test]
fn shipped_table_covers_the_half_space() {
    let t = shipped_table();
    assert_eq!(t.doa_grid.len(), 73);
    let (lo, hi) = t.range();
    assert!((lo + 90f64.to_radians()).abs() < 1e-12 && (hi - 90f64.to_radians()).abs() < 1e-12);
    assert_eq!(t.meta.normalization, "transmission");
    assert_eq!(t.meta.resolution, 20.0);
}

#[test]
fn shipped_vectors_are_normalized_and_passive() {
    for v in &shipped_table().vectors {
        let peak = v.beam_amplitudes.iter().map(|a| a.norm()).fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 1e-12, "{}", v.doa);
        let fr: f64 = v.power_fractions().iter().sum();
        assert!((fr - 1.0).abs() < 1e-12);
        assert!(v.focus_fraction + v.spillover_fraction <= 1.0 + 1e-12);
        // outgoing beam power cannot exceed what was injected
        let out: f64 = v.transmission().iter().map(|a| a.norm_sqr()).sum();
        assert!(out > 0.0 && out <= 1.0, "{}: {out}", v.doa.to_degrees());
    }
}

#[test]
fn shipped_table_interpolates_exactly_at_grid_points() {
    let t = shipped_table();
    for (theta, v) in t.doa_grid.iter().zip(&t.vectors) {
        let w = t.interpolate(*theta).unwrap();
        for (a, b) in w.transmission().iter().zip(v.transmission()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(w.peak_port, v.peak_port);
    }
}

#[test]
fn shipped_peak_port_moves_monotonically_over_the_design_range() {
    let t = shipped_table();
    let peaks: Vec<usize> = t
        .doa_grid
        .iter()
        .zip(&t.vectors)
        .filter(|(d, _)| d.to_degrees().abs() <= 50.0)
        .map(|(_, v)| v.peak_port)
        .collect();
    let up = peaks.windows(2).all(|w| w[1] >= w[0]);
    let down = peaks.windows(2).all(|w| w[1] <= w[0]);
    assert!(up || down, "{peaks:?}");
    assert_eq!(peaks[peaks.len() / 2], 7);
    assert_eq!(peaks[0] + peaks[peaks.len() - 1], 14);
}

#[test]
fn coarse_broadside_run_closes_the_energy_budget() {
    let g = synthesize(&LensDesignParams::reference_28ghz(WavelengthConvention::FreeSpace)).unwrap();
    let cfg = FdtdConfig {
        resolution: 15.0,
        ..FdtdConfig::default()
    };
    let m = LensModel::new(&g, &cfg).unwrap();
    let r = simulate_doa(0.0, &m, false).unwrap();
    assert_eq!(r.vector.peak_port, 7);
    let b = r.balance;
    assert!((b.closure() - 1.0).abs() < 0.03, "{b:?}");
    assert!(b.absorbed_dielectric > 0.0 && b.absorbed_pml >= 0.0 && b.absorbed_dummy >= 0.0);
    let t: f64 = r.vector.transmission().iter().map(|a| a.norm_sqr()).sum();
    assert!((t - b.beam_out / b.injected).abs() < 1e-9 * t, "{t} vs {}", b.beam_out / b.injected);
}
