mod common;

use common::{newton_point, path};
use proptest::prelude::*;
use rotman_core::lens::*;

fn reference() -> (LensDesignParams, LensGeometry) {
    let p = LensDesignParams::reference_28ghz(WavelengthConvention::FreeSpace);
    let g = synthesize(&p).unwrap();
    (p, g)
}

#[test]
fn numeric_root_finder_agrees_with_closed_form() {
    let (p, g) = reference();
    let tol = 1e-9 * p.f1;
    for (i, &y3) in g.aperture_positions.iter().enumerate() {
        let (q, w) = newton_point(&p, y3);
        assert!(q.dist(g.array_contour[i]) < tol, "element {i}: {q:?} vs {:?}", g.array_contour[i]);
        assert!((w - g.line_lengths[i]).abs() < tol, "element {i}");
    }
}

#[test]
fn independent_path_residual_below_tolerance() {
    let (p, g) = reference();
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        let base = path(&g, k, 6);
        for i in 0..g.n_array() {
            worst = worst.max((path(&g, k, i) - base).abs());
        }
    }
    assert!(worst < 1e-9 * p.f1, "{worst:e}");
    assert!(max_path_residual(&g) < 1e-9 * p.f1);
}

#[test]
fn reference_design_dimensions() {
    let (p, g) = reference();
    // five free-space wavelengths at 28 GHz
    assert!((p.f1 - 5.0 * 299_792_458.0 / 28e9).abs() < 1e-12);
    assert!((p.f1 - 53.534e-3).abs() < 1e-6);
    assert_eq!(g.n_beam(), 13);
    assert_eq!(g.n_array(), 13);
    assert!((g.beam_arc.center.x + 23.06e-3).abs() < 1e-5);
    assert!((g.beam_arc.radius - 30.48e-3).abs() < 1e-5);
    assert!((p.gamma() - 1.0).abs() < 1e-12);
}

#[test]
fn contour_is_mirror_symmetric() {
    let (_, g) = reference();
    let n = g.n_array();
    for i in 0..n {
        let (a, b) = (g.array_contour[i], g.array_contour[n - 1 - i]);
        assert!((a.x - b.x).abs() < 1e-15 && (a.y + b.y).abs() < 1e-15);
        assert!((g.line_lengths[i] - g.line_lengths[n - 1 - i]).abs() < 1e-15);
    }
    let m = mirrored(&g);
    for (a, b) in m.beam_ports.iter().zip(g.beam_ports.iter()) {
        assert!(a.position.dist(b.position) < 1e-15);
    }
}

#[test]
fn contour_height_increases_with_aperture_position() {
    let (_, g) = reference();
    for w in g.array_contour.windows(2) {
        assert!(w[1].y > w[0].y);
    }
}

#[test]
fn guided_design_with_guided_pitch_is_realizable() {
    let mut p = LensDesignParams::reference_28ghz(WavelengthConvention::Guided);
    p.element_spacing = p.guided_wavelength() / 2.0;
    let g = synthesize(&p).unwrap();
    assert!(max_path_residual(&g) < 1e-9 * p.f1);
}

#[test]
fn guided_design_with_free_space_pitch_has_no_root() {
    let p = LensDesignParams::reference_28ghz(WavelengthConvention::Guided);
    match synthesize(&p) {
        Err(rotman_core::Error::Element { index, .. }) => assert!(index == 0 || index >= 10),
        other => panic!("expected an element failure, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn synthesis_is_fast() {
    let t = std::time::Instant::now();
    let (p, g) = reference();
    assert!(max_path_residual(&g) < 1e-9 * p.f1);
    assert!(t.elapsed().as_secs_f64() < 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expansion_factor_is_sine_ratio(a in 0.05f64..1.5, phi in 0.05f64..1.5) {
        let g = expansion_factor(a, phi).unwrap();
        prop_assert!((g * a.sin() - phi.sin()).abs() < 1e-12);
        prop_assert!(g > 0.0);
        prop_assert!(g <= 1.0 / a.sin() + 1e-12);
    }

    #[test]
    fn residual_vanishes_across_designs(
        beta in 0.8f64..0.98, alpha_deg in 20.0f64..35.0, n in 3usize..16
    ) {
        let mut p = LensDesignParams::reference_28ghz(WavelengthConvention::FreeSpace);
        p.beta = beta;
        p.alpha = alpha_deg.to_radians();
        p.phi_max = p.alpha;
        p.n_array = n;
        p.n_beam = n;
        if let Ok(g) = synthesize(&p) {
            prop_assert!(max_path_residual(&g) < 1e-9 * p.f1);
            for w in g.array_contour.windows(2) {
                prop_assert!(w[1].y > w[0].y);
            }
        }
    }

    #[test]
    fn array_point_is_odd_in_eta(eta in -0.6f64..0.6) {
        let (p, _) = reference();
        let a = solve_array_point(eta, &p).unwrap();
        let b = solve_array_point(-eta, &p).unwrap();
        prop_assert!((a.position.x - b.position.x).abs() < 1e-12 * p.f1);
        prop_assert!((a.position.y + b.position.y).abs() < 1e-12 * p.f1);
        prop_assert!((a.w - b.w).abs() < 1e-12 * p.f1);
    }
}
