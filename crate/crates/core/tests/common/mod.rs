//! Oracles shared by the integration tests.

use rotman_core::geom::Point2;
use rotman_core::lens::*;

/// Equal-path conditions for the three foci, solved by Newton iteration on (x, y, w).
pub fn newton_point(p: &LensDesignParams, y3: f64) -> (Point2, f64) {
    let foci = beam_focal_points(p).0;
    let steer = focal_steering(p.theta_max);
    let root = p.eps_eff().sqrt();
    let resid = |v: [f64; 3]| -> [f64; 3] {
        let q = Point2::new(v[0], v[1]);
        let mut r = [0.0; 3];
        for k in 0..3 {
            r[k] = q.dist(foci[k]) + v[2] + y3 * steer[k].sin() / root - foci[k].norm();
        }
        r
    };
    let mut v = [0.0, y3, 0.0];
    for _ in 0..60 {
        let r0 = resid(v);
        let mut jac = [[0.0; 3]; 3];
        for c in 0..3 {
            let h = 1e-7 * p.f1;
            let mut vp = v;
            vp[c] += h;
            let mut vm = v;
            vm[c] -= h;
            let (rp, rm) = (resid(vp), resid(vm));
            for r in 0..3 {
                jac[r][c] = (rp[r] - rm[r]) / (2.0 * h);
            }
        }
        let d = solve3(jac, [-r0[0], -r0[1], -r0[2]]);
        for c in 0..3 {
            v[c] += d[c];
        }
        if d.iter().map(|x| x.abs()).fold(0.0, f64::max) < 1e-15 * p.f1 {
            break;
        }
    }
    (Point2::new(v[0], v[1]), v[2])
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    let mut x = [0.0; 3];
    for c in 0..3 {
        let mut m = a;
        for r in 0..3 {
            m[r][c] = b[r];
        }
        x[c] = det(m) / d;
    }
    x
}

/// Path through element i from focus k, recomputed from the raw geometry.
pub fn path(g: &LensGeometry, k: usize, i: usize) -> f64 {
    let theta = focal_steering(g.theta_max)[k];
    g.eps_eff.sqrt() * (g.focal_points.0[k].dist(g.array_contour[i]) + g.line_lengths[i])
        + g.aperture_positions[i] * theta.sin()
}
