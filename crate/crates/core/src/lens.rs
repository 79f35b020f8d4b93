//! Tri-focal Rotman lens synthesis.
//!
//! Coordinates: the array contour passes through the origin, the lens axis is the
//! x axis and the beam-side arc lies at negative x. Focal point `F0` sits on the
//! axis at distance `f1`, `F+`/`F-` at distance `f2 = beta * f1` and angles
//! `+alpha`/`-alpha` (positive angles toward +y). `F+` receives a plane wave
//! arriving at `+theta_max`, i.e. one excited with the ramp `exp(-j k0 y3 sin theta)`.
//!
//! For every aperture position `y3` the array-contour point `P` and the line length
//! `w` satisfy, in lens-medium length units,
//!
//! ```text
//! |F0 - P| + w              = f1
//! |F+ - P| + w + y3 * s     = f2
//! |F- - P| + w - y3 * s     = f2,     s = sin(theta_max) / sqrt(eps_eff)
//! ```
//!
//! which reduces to a quadratic in `w`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{is_simple_polygon, Point2};
use crate::material::{
    free_space_wavelength, guided_wavelength, microstrip_eps_eff, microstrip_width,
};

/// Which wavelength the lens dimensions given in wavelengths refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WavelengthConvention {
    Guided,
    #[default]
    FreeSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LensDesignParams {
    /// On-axis focal length (m).
    pub f1: f64,
    /// Focal ratio f2 / f1.
    pub beta: f64,
    /// Focal angle (rad).
    pub alpha: f64,
    /// Sweep angle of the beam ports (rad).
    pub phi_max: f64,
    /// Steering angle reached at the off-axis focal points (rad).
    pub theta_max: f64,
    pub n_beam: usize,
    pub n_array: usize,
    pub n_dummy: usize,
    /// Port taper length (m).
    pub taper_len: f64,
    /// Design frequency (Hz).
    pub freq: f64,
    pub eps_r: f64,
    pub tan_delta: f64,
    /// Substrate thickness (m).
    pub substrate_h: f64,
    /// Radiating element pitch (m).
    pub element_spacing: f64,
    /// Wall thickness left between neighbouring port tapers (m).
    pub septum: f64,
    /// Overrides the microstrip effective permittivity when set.
    pub eps_eff_override: Option<f64>,
}

impl LensDesignParams {
    /// The 13 x 13 port, 28 GHz design on 0.64 mm RF-60 with f1 = 5 wavelengths,
    /// beta = 0.9, alpha = phi_max = 30 deg, 50 deg steering and 3 wavelength tapers.
    pub fn reference_28ghz(convention: WavelengthConvention) -> Self {
        let mut p = LensDesignParams {
            f1: 0.0,
            beta: 0.9,
            alpha: 30f64.to_radians(),
            phi_max: 30f64.to_radians(),
            theta_max: 50f64.to_radians(),
            n_beam: 13,
            n_array: 13,
            n_dummy: 2,
            taper_len: 0.0,
            freq: 28e9,
            eps_r: 6.15,
            tan_delta: 0.0038,
            substrate_h: 0.64e-3,
            element_spacing: free_space_wavelength(28e9) / 2.0,
            septum: 0.0,
            eps_eff_override: None,
        };
        let lambda = p.design_wavelength(convention);
        p.f1 = 5.0 * lambda;
        p.taper_len = 3.0 * lambda;
        p.septum = 0.1 * p.guided_wavelength();
        p
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(key, msg))
            }
        };
        check(self.f1 > 0.0, "f1", "must be > 0")?;
        check(self.beta > 0.0 && self.beta <= 1.0, "beta", "must satisfy 0 < beta <= 1")?;
        check(self.alpha > 0.0 && self.alpha < FRAC_PI_2, "alpha", "must lie in (0, 90) deg")?;
        check(
            self.phi_max > 0.0 && self.phi_max < FRAC_PI_2,
            "phi_max",
            "must lie in (0, 90) deg",
        )?;
        check(
            self.theta_max > 0.0 && self.theta_max < FRAC_PI_2,
            "theta_max",
            "must lie in (0, 90) deg",
        )?;
        check(self.n_beam >= 1, "n_beam", "must be >= 1")?;
        check(self.n_array >= 1, "n_array", "must be >= 1")?;
        check(self.n_dummy.is_multiple_of(2), "n_dummy", "must be even (split over both side walls)")?;
        check(self.taper_len > 0.0, "taper_len", "must be > 0")?;
        check(self.freq > 0.0, "freq", "must be > 0")?;
        check(self.eps_r >= 1.0, "eps_r", "must be >= 1")?;
        check(self.tan_delta >= 0.0, "tan_delta", "must be >= 0")?;
        check(self.substrate_h > 0.0, "substrate_h", "must be > 0")?;
        check(self.element_spacing > 0.0, "element_spacing", "must be > 0")?;
        check(self.septum >= 0.0, "septum", "must be >= 0")?;
        if let Some(e) = self.eps_eff_override {
            check(e >= 1.0, "eps_eff", "must be >= 1")?;
        }
        Ok(())
    }

    pub fn f2(&self) -> f64 {
        self.beta * self.f1
    }

    /// Effective permittivity of the 2D medium: the override, or a 50 ohm microstrip on the substrate.
    pub fn eps_eff(&self) -> f64 {
        self.eps_eff_override.unwrap_or_else(|| {
            let w = microstrip_width(50.0, self.eps_r, self.substrate_h);
            microstrip_eps_eff(self.eps_r, self.substrate_h, w)
        })
    }

    pub fn guided_wavelength(&self) -> f64 {
        guided_wavelength(self.freq, self.eps_eff())
    }

    pub fn design_wavelength(&self, convention: WavelengthConvention) -> f64 {
        match convention {
            WavelengthConvention::Guided => self.guided_wavelength(),
            WavelengthConvention::FreeSpace => free_space_wavelength(self.freq),
        }
    }

    /// Reported design ratio sin(phi_max) / sin(alpha).
    pub fn gamma(&self) -> f64 {
        self.phi_max.sin() / self.alpha.sin()
    }

    /// Port-to-beam-angle scan factor sin(theta_max) / sin(alpha).
    pub fn gamma_scan(&self) -> f64 {
        self.theta_max.sin() / self.alpha.sin()
    }

    pub fn aperture_positions(&self) -> Vec<f64> {
        let mid = (self.n_array as f64 - 1.0) / 2.0;
        (0..self.n_array)
            .map(|i| (i as f64 - mid) * self.element_spacing)
            .collect()
    }
}

/// Lens expansion factor sin(phi_max) / sin(alpha).
pub fn expansion_factor(alpha: f64, phi_max: f64) -> Result<f64> {
    for (name, v) in [("alpha", alpha), ("phi_max", phi_max)] {
        if !(v > 0.0 && v < FRAC_PI_2) {
            return Err(Error::Domain(format!("{name} = {v} rad outside (0, pi/2)")));
        }
    }
    Ok(phi_max.sin() / alpha.sin())
}

/// On-axis, upper (+alpha) and lower (-alpha) focal points, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalPoints(pub [Point2; 3]);

impl FocalPoints {
    pub fn on_axis(&self) -> Point2 {
        self.0[0]
    }
    pub fn upper(&self) -> Point2 {
        self.0[1]
    }
    pub fn lower(&self) -> Point2 {
        self.0[2]
    }
}

pub fn beam_focal_points(params: &LensDesignParams) -> FocalPoints {
    let f2 = params.f2();
    let (s, c) = params.alpha.sin_cos();
    FocalPoints([
        Point2::new(-params.f1, 0.0),
        Point2::new(-f2 * c, f2 * s),
        Point2::new(-f2 * c, -f2 * s),
    ])
}

/// Steering angle each focal point is designed for, same order as [`FocalPoints`].
pub fn focal_steering(theta_max: f64) -> [f64; 3] {
    [0.0, theta_max, -theta_max]
}

/// Circle through the three focal points; its centre lies on the axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamArc {
    pub center: Point2,
    pub radius: f64,
}

impl BeamArc {
    pub fn through_focal_points(params: &LensDesignParams) -> Result<Self> {
        let f1 = params.f1;
        let f2 = params.f2();
        let den = f1 - f2 * params.alpha.cos();
        if den.abs() < 1e-12 * f1 {
            return Err(Error::Degenerate(
                "focal points coincide, beam arc undefined".into(),
            ));
        }
        let xc = (f2 * f2 - f1 * f1) / (2.0 * den);
        let radius = (f1 + xc).abs();
        if xc.abs() >= radius {
            return Err(Error::Degenerate(
                "array origin lies outside the beam arc circle".into(),
            ));
        }
        Ok(BeamArc {
            center: Point2::new(xc, 0.0),
            radius,
        })
    }

    /// Point of the arc seen from the origin at subtended angle `phi`.
    pub fn point_at(&self, phi: f64) -> Point2 {
        let d = Point2::new(-phi.cos(), phi.sin());
        let dc = d.dot(self.center);
        let disc = dc * dc - self.center.dot(self.center) + self.radius * self.radius;
        let t = dc + disc.sqrt();
        d * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamPort {
    pub position: Point2,
    /// Angle subtended at the array origin (rad).
    pub subtended_angle: f64,
    /// Direction of arrival that focuses on this port (rad).
    pub beam_angle: f64,
}

fn beam_port_angles(params: &LensDesignParams) -> (Vec<f64>, f64) {
    let n = params.n_beam;
    if n == 1 {
        return (vec![0.0], 2.0 * params.phi_max);
    }
    let step = 2.0 * params.phi_max / (n as f64 - 1.0);
    (
        (0..n).map(|i| -params.phi_max + step * i as f64).collect(),
        step,
    )
}

pub fn place_beam_ports(params: &LensDesignParams) -> Result<Vec<BeamPort>> {
    let arc = BeamArc::through_focal_points(params)?;
    let g = params.gamma_scan();
    let (angles, _) = beam_port_angles(params);
    angles
        .into_iter()
        .map(|phi| {
            let s = g * phi.sin();
            if s.abs() > 1.0 {
                return Err(Error::Domain(format!(
                    "beam port at {:.2} deg maps beyond end-fire",
                    phi.to_degrees()
                )));
            }
            Ok(BeamPort {
                position: arc.point_at(phi),
                subtended_angle: phi,
                beam_angle: s.asin(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayPoint {
    pub position: Point2,
    /// Line length relative to the on-axis element (m, lens-medium length).
    pub w: f64,
}

/// Contour point and line length for the aperture position `y3 = eta * f1`.
pub fn solve_array_point(eta: f64, params: &LensDesignParams) -> Result<ArrayPoint> {
    if !((eta * params.alpha.sin()).abs() < 1.0) {
        return Err(Error::Domain(format!(
            "|eta sin(alpha)| >= 1 for eta = {eta}"
        )));
    }
    let f1 = params.f1;
    let f2 = params.f2();
    let (sa, ca) = params.alpha.sin_cos();
    let s = params.theta_max.sin() / params.eps_eff().sqrt();
    let y3 = eta * f1;

    // x = a1 w + a0, y = b1 w + b0
    let den = 2.0 * (f2 * ca - f1);
    let a1 = 2.0 * (f1 - f2) / den;
    let a0 = y3 * y3 * s * s / den;
    let b0 = y3 * s / sa;
    let b1 = -b0 / f2;

    let qa = a1 * a1 + b1 * b1 - 1.0;
    let qb = 2.0 * a1 * (a0 + f1) + 2.0 * b1 * b0 + 2.0 * f1;
    let qc = (a0 + f1) * (a0 + f1) + b0 * b0 - f1 * f1;

    let w = if qa.abs() < 1e-14 {
        -qc / qb
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return Err(Error::NoRealRoot {
                eta,
                discriminant: disc,
            });
        }
        let q = -0.5 * (qb + qb.signum() * disc.sqrt());
        let r1 = q / qa;
        let r2 = if q != 0.0 { qc / q } else { r1 };
        if r1.abs() <= r2.abs() {
            r1
        } else {
            r2
        }
    };

    // the squared equations admit spurious roots with negative distances
    if f1 - w <= 0.0 || f2 - w - y3 * s <= 0.0 || f2 - w + y3 * s <= 0.0 {
        return Err(Error::NoRealRoot {
            eta,
            discriminant: f64::NAN,
        });
    }

    Ok(ArrayPoint {
        position: Point2::new(a1 * w + a0, b1 * w + b0),
        w,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortKind {
    Beam,
    Array,
}

/// One port taper: a straight channel of constant width leaving the lens at `mouth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortSegment {
    /// 1-based port id: beam ports first, then array ports.
    pub id: usize,
    pub kind: PortKind,
    /// Index within its kind (0-based).
    pub index: usize,
    pub mouth: [Point2; 2],
    /// Channel polygon (mouth edge first).
    pub outline: Vec<Point2>,
    /// Unit vector pointing away from the lens along the channel.
    pub axis: Point2,
    /// Channel width perpendicular to `axis` (m).
    pub width: f64,
}

impl PortSegment {
    /// Position along the channel axis measured from the outermost mouth corner.
    pub fn depth_of(&self, p: Point2) -> f64 {
        let base = self.mouth[0].dot(self.axis).max(self.mouth[1].dot(self.axis));
        p.dot(self.axis) - base
    }

    /// Lateral coordinate across the channel, zero at the channel centre line.
    pub fn lateral_of(&self, p: Point2) -> f64 {
        let mid = self.mouth[0].lerp(self.mouth[1], 0.5);
        (p - mid).dot(self.axis.perp())
    }

    /// Depth of the channel end wall.
    pub fn length(&self) -> f64 {
        self.outline
            .iter()
            .map(|p| self.depth_of(*p))
            .fold(f64::MIN, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DummySide {
    /// -y side wall.
    A,
    /// +y side wall.
    B,
}

/// Matched-absorbing wall segment of the lens outline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DummySegment {
    /// 1-based port id, numbered after the beam and array ports.
    pub id: usize,
    pub side: DummySide,
    pub start: Point2,
    pub end: Point2,
}

impl DummySegment {
    /// Unit normal pointing out of the lens.
    pub fn outward_normal(&self, interior: Point2) -> Point2 {
        let n = (self.end - self.start).perp().unit();
        if (interior - self.start).dot(n) > 0.0 {
            -n
        } else {
            n
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LensGeometry {
    pub beam_ports: Vec<BeamPort>,
    pub array_contour: Vec<Point2>,
    pub line_lengths: Vec<f64>,
    pub aperture_positions: Vec<f64>,
    pub dummy_segments: Vec<DummySegment>,
    pub port_segments: Vec<PortSegment>,
    /// Closed polygon of the parallel-plate region (last vertex connects to the first).
    pub outline: Vec<Point2>,
    pub focal_points: FocalPoints,
    pub beam_arc: BeamArc,
    pub eps_eff: f64,
    pub theta_max: f64,
    pub f1: f64,
    pub freq: f64,
    pub tan_delta: f64,
    /// Subtended angles of the beam-arc ends (rad).
    pub arc_span: (f64, f64),
}

impl LensGeometry {
    pub fn n_beam(&self) -> usize {
        self.beam_ports.len()
    }

    pub fn n_array(&self) -> usize {
        self.array_contour.len()
    }

    pub fn guided_wavelength(&self) -> f64 {
        guided_wavelength(self.freq, self.eps_eff)
    }

    pub fn beam_angles(&self) -> Vec<f64> {
        self.beam_ports.iter().map(|b| b.beam_angle).collect()
    }

    pub fn port(&self, id: usize) -> Option<&PortSegment> {
        self.port_segments.iter().find(|p| p.id == id)
    }

    pub fn beam_port_segments(&self) -> impl Iterator<Item = &PortSegment> {
        self.port_segments.iter().filter(|p| p.kind == PortKind::Beam)
    }

    pub fn array_port_segments(&self) -> impl Iterator<Item = &PortSegment> {
        self.port_segments
            .iter()
            .filter(|p| p.kind == PortKind::Array)
    }

    /// Interior reference point (midway between the on-axis focus and the array origin).
    pub fn interior_point(&self) -> Point2 {
        Point2::new(-0.5 * self.f1, 0.0)
    }

    /// All vertices of outline, tapers and dummy walls.
    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let pts = self
            .outline
            .iter()
            .chain(self.port_segments.iter().flat_map(|p| p.outline.iter()));
        for p in pts {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }
}

/// Electrical path from focal point `focal_index` through element `element_index` to the
/// aperture reference plane, minus the same path through element 0 (m).
pub fn path_length_residual(
    geometry: &LensGeometry,
    focal_index: usize,
    element_index: usize,
) -> Result<f64> {
    if focal_index > 2 {
        return Err(Error::IndexOutOfRange {
            what: "focal_index",
            index: focal_index,
            len: 3,
        });
    }
    let n = geometry.n_array();
    if element_index >= n {
        return Err(Error::IndexOutOfRange {
            what: "element_index",
            index: element_index,
            len: n,
        });
    }
    let f = geometry.focal_points.0[focal_index];
    let theta = focal_steering(geometry.theta_max)[focal_index];
    let root = geometry.eps_eff.sqrt();
    let path = |i: usize| {
        root * (f.dist(geometry.array_contour[i]) + geometry.line_lengths[i])
            + geometry.aperture_positions[i] * theta.sin()
    };
    Ok(path(element_index) - path(0))
}

/// Largest |residual| over all elements and the three focal points.
pub fn max_path_residual(geometry: &LensGeometry) -> f64 {
    let mut worst: f64 = 0.0;
    for f in 0..3 {
        for i in 0..geometry.n_array() {
            let r = path_length_residual(geometry, f, i).expect("indices in range");
            worst = worst.max(r.abs());
        }
    }
    worst
}

fn beam_channel(id: usize, index: usize, e0: Point2, e1: Point2, params: &LensDesignParams, arc: &BeamArc) -> PortSegment {
    let u = (e1 - e0).unit();
    let a = e0 + u * (params.septum / 2.0);
    let b = e1 - u * (params.septum / 2.0);
    let mid = a.lerp(b, 0.5);
    let mut axis = u.perp();
    if axis.dot(mid - arc.center) < 0.0 {
        axis = -axis;
    }
    let l = params.taper_len;
    PortSegment {
        id,
        kind: PortKind::Beam,
        index,
        mouth: [a, b],
        outline: vec![a, b, b + axis * l, a + axis * l],
        axis,
        width: a.dist(b),
    }
}

fn array_channel(id: usize, index: usize, g0: Point2, g1: Point2, params: &LensDesignParams) -> PortSegment {
    let u = (g1 - g0).unit();
    let a = g0 + u * (params.septum / 2.0);
    let b = g1 - u * (params.septum / 2.0);
    let x_end = a.x.max(b.x) + params.taper_len;
    PortSegment {
        id,
        kind: PortKind::Array,
        index,
        mouth: [a, b],
        outline: vec![a, b, Point2::new(x_end, b.y), Point2::new(x_end, a.y)],
        axis: Point2::new(1.0, 0.0),
        width: (b.y - a.y).abs(),
    }
}

/// Full lens geometry from the design parameters.
pub fn synthesize(params: &LensDesignParams) -> Result<LensGeometry> {
    params.validate()?;
    let arc = BeamArc::through_focal_points(params)?;
    let beam_ports = place_beam_ports(params)?;
    let (_, step) = beam_port_angles(params);
    let nb = params.n_beam;
    let na = params.n_array;

    let solve = |y3: f64, index: usize| {
        solve_array_point(y3 / params.f1, params).map_err(|e| Error::Element {
            index,
            source: Box::new(e),
        })
    };

    let aperture_positions = params.aperture_positions();
    let mut array_contour = Vec::with_capacity(na);
    let mut line_lengths = Vec::with_capacity(na);
    for (i, &y3) in aperture_positions.iter().enumerate() {
        let p = solve(y3, i)?;
        array_contour.push(p.position);
        line_lengths.push(p.w);
    }
    // mouth edges half a pitch either side of each element
    let d = params.element_spacing;
    let mut array_edges = Vec::with_capacity(na + 1);
    for k in 0..=na {
        let y3 = aperture_positions[0] - d / 2.0 + k as f64 * d;
        array_edges.push(solve(y3, k.min(na - 1))?.position);
    }

    let phi_lo = beam_ports[0].subtended_angle - step / 2.0;
    let phi_hi = beam_ports[nb - 1].subtended_angle + step / 2.0;
    let beam_edges: Vec<Point2> = (0..=nb)
        .map(|k| arc.point_at(phi_lo + k as f64 * step))
        .collect();

    let mut port_segments = Vec::with_capacity(nb + na);
    for i in 0..nb {
        port_segments.push(beam_channel(i + 1, i, beam_edges[i], beam_edges[i + 1], params, &arc));
    }
    for i in 0..na {
        port_segments.push(array_channel(nb + i + 1, i, array_edges[i], array_edges[i + 1], params));
    }

    // outline: beam arc (-y to +y), side wall B, array contour (+y to -y), side wall A
    let per_port = 8;
    let n_arc = nb * per_port;
    let mut outline: Vec<Point2> = (0..=n_arc)
        .map(|k| arc.point_at(phi_lo + (phi_hi - phi_lo) * k as f64 / n_arc as f64))
        .collect();
    for k in (0..na).rev() {
        outline.push(array_edges[k + 1]);
        outline.push(array_contour[k]);
    }
    outline.push(array_edges[0]);

    let arc_start = outline[0];
    let arc_end = outline[n_arc];
    let per_side = params.n_dummy / 2;
    let mut dummy_segments = Vec::with_capacity(params.n_dummy);
    let first_dummy = nb + na + 1;
    for (side, from, to) in [
        (DummySide::A, array_edges[0], arc_start),
        (DummySide::B, arc_end, array_edges[na]),
    ] {
        for k in 0..per_side {
            let t0 = k as f64 / per_side as f64;
            let t1 = (k + 1) as f64 / per_side as f64;
            dummy_segments.push(DummySegment {
                id: first_dummy + dummy_segments.len(),
                side,
                start: from.lerp(to, t0),
                end: from.lerp(to, t1),
            });
        }
    }

    let geometry = LensGeometry {
        beam_ports,
        array_contour,
        line_lengths,
        aperture_positions,
        dummy_segments,
        port_segments,
        outline,
        focal_points: beam_focal_points(params),
        beam_arc: arc,
        eps_eff: params.eps_eff(),
        theta_max: params.theta_max,
        f1: params.f1,
        freq: params.freq,
        tan_delta: params.tan_delta,
        arc_span: (phi_lo, phi_hi),
    };
    if !is_simple_polygon(&geometry.outline) {
        return Err(Error::Degenerate("lens outline self-intersects".into()));
    }
    Ok(geometry)
}

/// Reflects every coordinate across the lens axis and reverses port order.
pub fn mirrored(geometry: &LensGeometry) -> LensGeometry {
    let mut g = geometry.clone();
    g.beam_ports = geometry
        .beam_ports
        .iter()
        .rev()
        .map(|b| BeamPort {
            position: b.position.mirror(),
            subtended_angle: -b.subtended_angle,
            beam_angle: -b.beam_angle,
        })
        .collect();
    g.array_contour = geometry.array_contour.iter().rev().map(|p| p.mirror()).collect();
    g.line_lengths = geometry.line_lengths.iter().rev().copied().collect();
    g.aperture_positions = geometry.aperture_positions.iter().rev().map(|y| -y).collect();
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params() -> LensDesignParams {
        let mut p = LensDesignParams::reference_28ghz(WavelengthConvention::FreeSpace);
        p.f1 = 1.0;
        p
    }

    #[test]
    fn expansion_factor_examples() {
        let d = f64::to_radians;
        assert!((expansion_factor(d(30.0), d(30.0)).unwrap() - 1.0).abs() < 1e-15);
        let g = expansion_factor(d(30.0), d(89.9)).unwrap();
        assert!((g - d(89.9).sin() / 0.5).abs() < 1e-12);
        assert!((g - 1.999997).abs() < 1e-6);
        assert!((expansion_factor(d(45.0), d(30.0)).unwrap() - 0.5f64.sqrt()).abs() < 1e-5);
        assert!(expansion_factor(0.0, d(30.0)).is_err());
        assert!(expansion_factor(d(30.0), d(90.0)).is_err());
    }

    #[test]
    fn focal_points_at_stated_distances() {
        let p = unit_params();
        let f = beam_focal_points(&p);
        assert_eq!(f.on_axis(), Point2::new(-1.0, 0.0));
        for q in [f.upper(), f.lower()] {
            assert!((q.norm() - 0.9).abs() < 1e-15);
            assert!((q.y.abs().atan2(-q.x) - 30f64.to_radians()).abs() < 1e-12);
        }
        assert_eq!(f.upper(), f.lower().mirror());
    }

    #[test]
    fn focal_points_coincide_in_degenerate_limit() {
        let mut p = unit_params();
        p.beta = 1.0;
        p.alpha = 1e-9;
        let f = beam_focal_points(&p);
        for q in f.0 {
            assert!(q.dist(Point2::new(-1.0, 0.0)) < 1e-8);
        }
    }

    #[test]
    fn beam_ports_on_arc() {
        let p = unit_params();
        let ports = place_beam_ports(&p).unwrap();
        assert_eq!(ports.len(), 13);
        let f = beam_focal_points(&p);
        assert!(ports[6].position.dist(f.on_axis()) < 1e-12);
        assert_eq!(ports[6].beam_angle, 0.0);
        assert!((ports[0].subtended_angle + 30f64.to_radians()).abs() < 1e-12);
        assert!((ports[12].subtended_angle - 30f64.to_radians()).abs() < 1e-12);
        // with phi_max = alpha the end ports sit on the off-axis foci and steer to theta_max
        assert!(ports[12].position.dist(f.upper()) < 1e-12);
        assert!(ports[0].position.dist(f.lower()) < 1e-12);
        assert!((ports[12].beam_angle - 50f64.to_radians()).abs() < 1e-12);
        let arc = BeamArc::through_focal_points(&p).unwrap();
        for b in &ports {
            assert!((b.position.dist(arc.center) - arc.radius).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_arc_rejected() {
        let mut p = unit_params();
        p.beta = 1.0;
        p.alpha = 1e-9;
        assert!(BeamArc::through_focal_points(&p).is_err());
    }

    #[test]
    fn axis_point_is_origin() {
        let p = unit_params();
        let a = solve_array_point(0.0, &p).unwrap();
        assert_eq!(a.position.y, 0.0);
        assert_eq!(a.w, 0.0);
        assert!(a.position.norm() < 1e-15);
    }

    #[test]
    fn opposite_eta_mirrors() {
        let p = unit_params();
        let a = solve_array_point(0.3, &p).unwrap();
        let b = solve_array_point(-0.3, &p).unwrap();
        assert!((a.position.x - b.position.x).abs() < 1e-15);
        assert!((a.position.y + b.position.y).abs() < 1e-15);
        assert!((a.w - b.w).abs() < 1e-15);
    }

    #[test]
    fn unrealizable_eta_is_domain_error() {
        let p = unit_params();
        assert!(matches!(solve_array_point(2.5, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn residual_errors_and_self_reference() {
        let g = synthesize(&LensDesignParams::reference_28ghz(WavelengthConvention::FreeSpace)).unwrap();
        for f in 0..3 {
            assert_eq!(path_length_residual(&g, f, 0).unwrap(), 0.0);
        }
        assert!(path_length_residual(&g, 3, 0).is_err());
        assert!(path_length_residual(&g, 0, 13).is_err());
    }

    #[test]
    fn line_perturbation_is_linear() {
        let mut g = synthesize(&LensDesignParams::reference_28ghz(WavelengthConvention::FreeSpace)).unwrap();
        let before = path_length_residual(&g, 1, 5).unwrap();
        let delta = 1e-4;
        g.line_lengths[5] += delta;
        let after = path_length_residual(&g, 1, 5).unwrap();
        assert!((after - before - delta * g.eps_eff.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn port_and_dummy_counts() {
        let g = synthesize(&LensDesignParams::reference_28ghz(WavelengthConvention::FreeSpace)).unwrap();
        assert_eq!(g.port_segments.len(), 26);
        assert_eq!(g.beam_port_segments().count(), 13);
        assert_eq!(g.dummy_segments.len(), 2);
        assert_eq!(g.dummy_segments[0].id, 27);
        assert_eq!(g.dummy_segments[1].id, 28);
    }

    #[test]
    fn no_dummies_closes_outline_directly() {
        let mut p = LensDesignParams::reference_28ghz(WavelengthConvention::FreeSpace);
        p.n_dummy = 0;
        let g = synthesize(&p).unwrap();
        assert!(g.dummy_segments.is_empty());
        assert!(is_simple_polygon(&g.outline));
    }

    #[test]
    fn single_port_lens() {
        let mut p = LensDesignParams::reference_28ghz(WavelengthConvention::FreeSpace);
        p.n_beam = 1;
        p.n_array = 1;
        let g = synthesize(&p).unwrap();
        assert_eq!(g.beam_ports.len(), 1);
        assert_eq!(g.array_contour[0], Point2::ORIGIN);
        assert_eq!(max_path_residual(&g), 0.0);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = unit_params();
        p.beta = 1.5;
        match synthesize(&p) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "beta"),
            other => panic!("unexpected {other:?}"),
        }
        let mut p = unit_params();
        p.n_dummy = 3;
        assert!(synthesize(&p).is_err());
    }
}
