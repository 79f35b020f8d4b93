use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rotman_core::beamspace::*;
use rotman_core::coupling::{CouplingTable, CouplingVector, TableMeta};

fn beam_angles() -> Vec<f64> {
    (0..13)
        .map(|i| ((i as f64 - 6.0) / 6.0 * 50f64.to_radians().sin()).asin())
        .collect()
}

/// Smooth synthetic response: a complex Gaussian bump centred on the nearest port in sine.
fn synthetic_table() -> CouplingTable {
    let b = beam_angles();
    let grid: Vec<f64> = (0..=36).map(|i| (-90.0 + 5.0 * i as f64).to_radians()).collect();
    let vectors = grid
        .iter()
        .map(|&t| {
            let amps: Vec<Complex64> = b
                .iter()
                .map(|a| {
                    let d = (a.sin() - t.sin()) / 0.12;
                    Complex64::from_polar((-d * d).exp(), 3.0 * t + *a)
                })
                .collect();
            // transmission falls off toward end-fire
            CouplingVector::normalized(t, amps, vec![Complex64::new(0.01, 0.0); 13])
                .with_scale(0.9 - 0.4 * t.sin().abs())
        })
        .collect();
    let meta = TableMeta {
        resolution: f64::NAN,
        eps_eff: f64::NAN,
        freq: 28e9,
        normalization: "transmission".into(),
        n_beam: 13,
        n_array: 13,
    };
    CouplingTable::new(grid, vectors, meta).unwrap()
}

/// Direct re-summation written independently of `effective_channel`.
fn oracle_channel(
    real: &ChannelRealization,
    table: &CouplingTable,
    scale: f64,
) -> Vec<Vec<Complex64>> {
    let mut out = Vec::new();
    for user in &real.users {
        let mut h = [Complex64::new(0.0, 0.0); 13];
        for path in &user.paths {
            // locate bracketing grid points by scanning
            let g = &table.doa_grid;
            let mut k = 0;
            while k + 1 < g.len() && g[k + 1] < path.angle {
                k += 1;
            }
            let (lo, hi) = (k, (k + 1).min(g.len() - 1));
            let w = if hi == lo { 0.0 } else { (path.angle - g[lo]) / (g[hi] - g[lo]) };
            for p in 0..13 {
                let (vl, vh) = (&table.vectors[lo], &table.vectors[hi]);
                let a = vl.beam_amplitudes[p] * vl.transmission_scale;
                let b = vh.beam_amplitudes[p] * vh.transmission_scale;
                let s = a + (b - a) * w;
                h[p] += path.gain * s * scale;
            }
        }
        out.push(h.iter().map(|x| x * user.large_scale.sqrt()).collect());
    }
    out
}

#[test]
fn aberrated_channel_matches_resummation() {
    let table = synthetic_table();
    let v0 = &table.vectors[18];
    assert_eq!(v0.doa, 0.0);
    let broadside: f64 = v0.powers().iter().sum::<f64>() * v0.transmission_scale.powi(2);
    let scale = 1.0 / broadside.sqrt();
    let lens = LensResponse::aberrated(table.clone()).unwrap();
    let params = ChannelParams::default();
    let large = LargeScaleParams::default();
    for trial in 0..50 {
        let real = draw_channel(&params, &large, 2, &mut trial_rng(99, trial));
        let got = effective_channel(&real, &lens).unwrap();
        let want = oracle_channel(&real, &table, scale);
        for (a, b) in got.iter().flatten().zip(want.iter().flatten()) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1e-3), "{a} vs {b}");
        }
    }
}

#[test]
fn calibration_equalizes_broadside_power() {
    let lens = LensResponse::aberrated(synthetic_table()).unwrap();
    let ideal = LensResponse::ideal(beam_angles());
    let p = |l: &LensResponse| -> f64 { l.response(0.0).unwrap().iter().map(|x| x.norm_sqr()).sum() };
    assert!((p(&lens) - p(&ideal)).abs() < 1e-12);
}

#[test]
fn aberrated_out_of_table_range_is_error() {
    let mut t = synthetic_table();
    let keep = 5..32;
    t = CouplingTable::new(t.doa_grid[keep.clone()].to_vec(), t.vectors[keep].to_vec(), t.meta).unwrap();
    let lens = LensResponse::aberrated(t).unwrap();
    let real = ChannelRealization {
        users: vec![UserChannel {
            paths: vec![PathComponent {
                angle: 80f64.to_radians(),
                gain: Complex64::new(1.0, 0.0),
            }],
            large_scale: 1.0,
        }],
    };
    assert!(effective_channel(&real, &lens).is_err());
}

#[test]
fn single_trial_models_share_the_channel() {
    let lenses = [
        LensResponse::ideal(beam_angles()),
        LensResponse::aberrated(synthetic_table()).unwrap(),
    ];
    let sp = SystemParams::default();
    let r = monte_carlo(&sp, &lenses, 1, 17).unwrap();
    let real = draw_channel(&sp.channel, &sp.large_scale, 2, &mut trial_rng(17, 0));
    for (li, lens) in lenses.iter().enumerate() {
        let h = effective_channel(&real, lens).unwrap();
        let ports = select_ports(&h, 2).unwrap();
        let out = mr_combine(&h, &ports, sp.noise_power()).unwrap();
        for u in 0..2 {
            assert_eq!(r.models[li].users[u].desired[0], out[u].desired);
            assert_eq!(r.models[li].users[u].interference[0], out[u].interference);
        }
    }
}

#[test]
fn results_independent_of_worker_count() {
    let lenses = [
        LensResponse::ideal(beam_angles()),
        LensResponse::aberrated(synthetic_table()).unwrap(),
    ];
    let sp = SystemParams::default();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| monte_carlo(&sp, &lenses, 2000, 8).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one, four);
    assert_eq!(one.results_csv(), four.results_csv());
}

#[test]
fn snr_scales_both_metrics() {
    let lenses = [LensResponse::ideal(beam_angles())];
    let mut sp = SystemParams::default();
    let a = monte_carlo(&sp, &lenses, 200, 2).unwrap();
    sp.snr_db = 10.0;
    let b = monte_carlo(&sp, &lenses, 200, 2).unwrap();
    for (x, y) in a.models[0].users[0].desired.iter().zip(&b.models[0].users[0].desired) {
        assert!((y / x - 10.0).abs() < 1e-9);
    }
}

#[test]
fn mr_combine_matches_naive_loops_for_many_users() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let users = rng.random_range(1..=4usize);
        let ports: Vec<usize> = (0..users).map(|u| u * 2).collect();
        let h: Vec<Vec<Complex64>> = (0..users)
            .map(|_| (0..9).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect())
            .collect();
        let noise = 0.3;
        let out = mr_combine(&h, &ports, noise).unwrap();
        for u in 0..users {
            let mut wh = 0.0;
            for &p in &ports {
                wh += h[u][p].norm_sqr();
            }
            assert!((out[u].desired - wh * wh / noise).abs() < 1e-12 * (wh * wh / noise).max(1.0));
            let mut interf = 0.0;
            for v in 0..users {
                if v == u {
                    continue;
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for &p in &ports {
                    acc += h[u][p].conj() * h[v][p];
                }
                interf += acc.norm_sqr();
            }
            assert!((out[u].interference - interf / noise).abs() < 1e-12 * (interf / noise).max(1.0));
        }
    }
}
