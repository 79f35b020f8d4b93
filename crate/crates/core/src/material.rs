//! Physical constants and the quasi-static microstrip effective-medium model.

use std::f64::consts::PI;

pub const C0: f64 = 299_792_458.0;
pub const EPS0: f64 = 8.854_187_812_8e-12;
pub const MU0: f64 = 1.256_637_062_12e-6;

/// Free-space wave impedance (ohms).
pub fn eta0() -> f64 {
    (MU0 / EPS0).sqrt()
}

pub fn free_space_wavelength(freq: f64) -> f64 {
    C0 / freq
}

pub fn guided_wavelength(freq: f64, eps_eff: f64) -> f64 {
    C0 / (freq * eps_eff.sqrt())
}

/// Trace width giving the requested characteristic impedance (Wheeler/Hammerstad synthesis).
pub fn microstrip_width(z0: f64, eps_r: f64, h: f64) -> f64 {
    let a = z0 / 60.0 * ((eps_r + 1.0) / 2.0).sqrt()
        + (eps_r - 1.0) / (eps_r + 1.0) * (0.23 + 0.11 / eps_r);
    let wh = 8.0 * a.exp() / ((2.0 * a).exp() - 2.0);
    if wh <= 2.0 {
        return wh * h;
    }
    let b = 377.0 * PI / (2.0 * z0 * eps_r.sqrt());
    let wh = 2.0 / PI
        * (b - 1.0 - (2.0 * b - 1.0).ln()
            + (eps_r - 1.0) / (2.0 * eps_r) * ((b - 1.0).ln() + 0.39 - 0.61 / eps_r));
    wh * h
}

/// Static effective permittivity of a microstrip line of width `w` on a substrate of height `h`.
pub fn microstrip_eps_eff(eps_r: f64, h: f64, w: f64) -> f64 {
    (eps_r + 1.0) / 2.0 + (eps_r - 1.0) / 2.0 / (1.0 + 12.0 * h / w).sqrt()
}

/// Equivalent conductivity of a dielectric with loss tangent `tan_delta` at `freq`.
pub fn loss_conductivity(freq: f64, eps: f64, tan_delta: f64) -> f64 {
    2.0 * PI * freq * EPS0 * eps * tan_delta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifty_ohm_on_rf60() {
        let h = 0.64e-3;
        let w = microstrip_width(50.0, 6.15, h);
        // W/h for 50 ohm on eps_r ~ 6 is close to 1.45
        assert!((w / h - 1.47).abs() < 0.03, "w/h = {}", w / h);
        let e = microstrip_eps_eff(6.15, h, w);
        assert!(e > 4.3 && e < 4.5, "eps_eff = {e}");
    }

    #[test]
    fn eps_eff_limits() {
        // very wide line approaches the bulk value, very narrow the mean of substrate and air
        assert!((microstrip_eps_eff(6.15, 1e-3, 1e3) - 6.15).abs() < 1e-2);
        assert!((microstrip_eps_eff(6.15, 1e-3, 1e-9) - 3.575).abs() < 1e-2);
    }
}
