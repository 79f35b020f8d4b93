//! Material grid and rasterization of a lens geometry onto the Yee lattice.
//!
//! `Ez` lives on the nodes `(i, j)` at `origin + (i dx, j dx)`; nodes are stored
//! row-major with `i` (x) fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{point_in_polygon, segment_distance, Point2};
use crate::lens::{LensGeometry, PortKind, PortSegment};
use crate::material::{eta0, loss_conductivity, EPS0};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    Dielectric,
    Conductor,
    /// Depth 1 is the innermost PML layer.
    Pml { depth: u16 },
}

/// Power-accounting region of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    Wall,
    /// Lens body plus the channel sections in front of the port reference planes.
    Lens,
    /// Clean channel section behind the reference plane of the port.
    Channel(u16),
    /// Matched termination of a port or dummy wall.
    Absorber(u16),
    Pml,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RasterConfig {
    /// Cells per guided wavelength.
    pub resolution: f64,
    pub pml_cells: usize,
    /// Grading order of the PML and the port absorbers.
    pub pml_order: f64,
    pub max_cells: usize,
    /// Wall cells between the geometry bounding box and the PML.
    pub margin_cells: usize,
    /// Matched termination length at the end of each taper (guided wavelengths).
    pub absorber_len: f64,
    /// Spacing of the three probe lines used for wave separation (guided wavelengths).
    pub probe_spacing: f64,
}

impl Default for RasterConfig {
    fn default() -> Self {
        Self {
            resolution: 20.0,
            pml_cells: 10,
            pml_order: 3.0,
            max_cells: 4_000_000,
            margin_cells: 2,
            absorber_len: 1.5,
            probe_spacing: 0.125,
        }
    }
}

/// Weighted node taps across a channel at one depth.
///
/// For probes the weights project `Ez` onto the fundamental channel mode, so the
/// weighted sum is the mode's peak amplitude; for sources they carry the mode profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceLine {
    pub depth: f64,
    pub taps: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortFace {
    pub port: usize,
    pub kind: PortKind,
    /// Width seen by the fundamental mode on the grid (m).
    pub width: f64,
    /// Probe lines at reference depth - spacing, reference, reference + spacing.
    pub probes: [FaceLine; 3],
    /// Source line behind the probes, facing the lens.
    pub source: FaceLine,
    /// Distance from the source line to the port's contour point along the channel (m).
    pub source_distance: f64,
}

impl PortFace {
    pub fn probe_spacing(&self) -> f64 {
        self.probes[1].depth - self.probes[0].depth
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaterialGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    /// Position of node (0, 0).
    pub origin: Point2,
    /// Relative permittivity of every non-conductor node.
    pub eps_r: f64,
    pub freq: f64,
    pub kinds: Vec<CellKind>,
    pub regions: Vec<Region>,
    /// Electric conductivity per node (S/m).
    pub sigma_e: Vec<f64>,
    /// Matched-absorber conductivity per node; the magnetic loss is `sigma_m * mu0 / eps`.
    pub sigma_m: Vec<f64>,
    pub pml_cells: usize,
    pub pml_order: f64,
    pub port_faces: Vec<PortFace>,
}

impl MaterialGrid {
    /// Homogeneous lossy medium surrounded by the PML ring.
    pub fn uniform(
        nx: usize,
        ny: usize,
        dx: f64,
        eps_r: f64,
        freq: f64,
        tan_delta: f64,
        pml_cells: usize,
    ) -> Result<Self> {
        if nx <= 2 * pml_cells + 2 || ny <= 2 * pml_cells + 2 {
            return Err(Error::Invalid(format!(
                "grid {nx}x{ny} too small for a {pml_cells}-cell PML"
            )));
        }
        let n = nx * ny;
        let sigma = loss_conductivity(freq, eps_r, tan_delta);
        let mut g = MaterialGrid {
            nx,
            ny,
            dx,
            origin: Point2::ORIGIN,
            eps_r,
            freq,
            kinds: vec![CellKind::Dielectric; n],
            regions: vec![Region::Lens; n],
            sigma_e: vec![sigma; n],
            sigma_m: vec![0.0; n],
            pml_cells,
            pml_order: 3.0,
            port_faces: Vec::new(),
        };
        g.mark_pml();
        Ok(g)
    }

    fn mark_pml(&mut self) {
        let (nx, ny, p) = (self.nx, self.ny, self.pml_cells);
        for j in 0..ny {
            for i in 0..nx {
                let di = if i < p { p - i } else if i >= nx - p { i + p + 1 - nx } else { 0 };
                let dj = if j < p { p - j } else if j >= ny - p { j + p + 1 - ny } else { 0 };
                let d = di.max(dj);
                if d > 0 {
                    let n = j * nx + i;
                    self.kinds[n] = CellKind::Pml { depth: d as u16 };
                    self.regions[n] = Region::Pml;
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node_position(&self, n: usize) -> Point2 {
        let (i, j) = (n % self.nx, n / self.nx);
        self.origin + Point2::new(i as f64 * self.dx, j as f64 * self.dx)
    }

    /// Fractional node coordinates of a point.
    pub fn to_grid(&self, p: Point2) -> (f64, f64) {
        let q = p - self.origin;
        (q.x / self.dx, q.y / self.dx)
    }

    pub fn eps(&self) -> f64 {
        EPS0 * self.eps_r
    }

    pub fn count(&self, pred: impl Fn(CellKind) -> bool) -> usize {
        self.kinds.iter().filter(|k| pred(**k)).count()
    }

    pub fn conductor_count(&self) -> usize {
        self.count(|k| k == CellKind::Conductor)
    }

    pub fn dielectric_count(&self) -> usize {
        self.count(|k| k == CellKind::Dielectric)
    }

    pub fn face(&self, port: usize) -> Option<&PortFace> {
        self.port_faces.iter().find(|f| f.port == port)
    }

    /// PML grading profile (S/m) at a fractional depth into the layer.
    pub fn pml_sigma(&self, depth: f64) -> f64 {
        if depth <= 0.0 || self.pml_cells == 0 {
            return 0.0;
        }
        let eta = eta0() / self.eps_r.sqrt();
        let smax = 0.8 * (self.pml_order + 1.0) / (eta * self.dx);
        smax * (depth / self.pml_cells as f64).min(1.0).powf(self.pml_order)
    }

    /// Depth into the x-directed PML of a (possibly half-integer) x node coordinate.
    pub fn pml_depth_x(&self, x: f64) -> f64 {
        let p = self.pml_cells as f64;
        let hi = (self.nx - 1) as f64 - p;
        (p - x).max(x - hi).max(0.0)
    }

    pub fn pml_depth_y(&self, y: f64) -> f64 {
        let p = self.pml_cells as f64;
        let hi = (self.ny - 1) as f64 - p;
        (p - y).max(y - hi).max(0.0)
    }
}

fn graded(sigma_max: f64, frac: f64, order: f64) -> f64 {
    sigma_max * frac.clamp(0.0, 1.0).powf(order)
}

/// Conductivity peak giving a round-trip reflection of about `r` through a graded layer of length `len`.
fn absorber_sigma_max(len: f64, eps_r: f64, order: f64, r: f64) -> f64 {
    let eta = eta0() / eps_r.sqrt();
    (order + 1.0) * (1.0 / r).ln() / (2.0 * eta * len)
}

struct ChannelFrame<'a> {
    seg: &'a PortSegment,
    length: f64,
}

/// Rasterize the lens region, its port tapers and dummy terminations.
pub fn rasterize(geometry: &LensGeometry, cfg: &RasterConfig) -> Result<MaterialGrid> {
    if !(cfg.resolution >= 10.0) {
        return Err(Error::Invalid(format!(
            "resolution {} below 10 cells per wavelength",
            cfg.resolution
        )));
    }
    let lg = geometry.guided_wavelength();
    let dx = lg / cfg.resolution;
    let abs_len = cfg.absorber_len * lg;
    let eps_r = geometry.eps_eff;
    let order = cfg.pml_order;

    let empty = geometry.outline.is_empty() && geometry.port_segments.is_empty();
    let (lo, hi) = if empty {
        (Point2::ORIGIN, Point2::ORIGIN)
    } else {
        let (mut lo, mut hi) = geometry.bounding_box();
        for d in &geometry.dummy_segments {
            let n = d.outward_normal(geometry.interior_point());
            for p in [d.start, d.end] {
                let q = p + n * abs_len;
                lo = Point2::new(lo.x.min(q.x), lo.y.min(q.y));
                hi = Point2::new(hi.x.max(q.x), hi.y.max(q.y));
            }
        }
        (lo, hi)
    };
    let pad = (cfg.margin_cells + cfg.pml_cells) as f64 * dx;
    let nx = ((hi.x - lo.x + 2.0 * pad) / dx).ceil() as usize + 1;
    let ny = ((hi.y - lo.y + 2.0 * pad) / dx).ceil() as usize + 1;
    let cells = nx * ny;
    if cells > cfg.max_cells {
        return Err(Error::GridTooLarge {
            cells,
            limit: cfg.max_cells,
        });
    }
    let mut grid = MaterialGrid::uniform(
        nx,
        ny,
        dx,
        eps_r,
        geometry.freq,
        geometry.tan_delta,
        cfg.pml_cells,
    )?;
    grid.pml_order = order;
    // centre the geometry in the domain
    let span_x = (nx - 1) as f64 * dx;
    let span_y = (ny - 1) as f64 * dx;
    grid.origin = Point2::new(
        0.5 * (lo.x + hi.x) - 0.5 * span_x,
        0.5 * (lo.y + hi.y) - 0.5 * span_y,
    );
    if empty {
        return Ok(grid);
    }

    let sigma_loss = loss_conductivity(geometry.freq, eps_r, geometry.tan_delta);
    let sigma_abs = absorber_sigma_max(abs_len, eps_r, order, 1e-6);
    let interior = geometry.interior_point();
    let channels: Vec<ChannelFrame> = geometry
        .port_segments
        .iter()
        .map(|seg| ChannelFrame {
            seg,
            length: seg.length(),
        })
        .collect();

    // reference plane of every port: middle probe line
    let spacing = cfg.probe_spacing * lg;
    let plane = |len: f64| {
        let clean = len - abs_len;
        let first = (1.0 * lg).min(0.4 * clean);
        first + spacing
    };

    for n in 0..grid.len() {
        if matches!(grid.kinds[n], CellKind::Pml { .. }) {
            continue;
        }
        let p = grid.node_position(n);
        if point_in_polygon(p, &geometry.outline) {
            grid.regions[n] = Region::Lens;
            grid.sigma_e[n] = sigma_loss;
            continue;
        }
        let mut assigned = false;
        for ch in &channels {
            if !point_in_polygon(p, &ch.seg.outline) {
                continue;
            }
            let depth = ch.seg.depth_of(p);
            let id = ch.seg.id as u16;
            let start = ch.length - abs_len;
            if depth > start {
                let s = graded(sigma_abs, (depth - start) / abs_len, order);
                grid.regions[n] = Region::Absorber(id);
                grid.sigma_e[n] = sigma_loss + s;
                grid.sigma_m[n] = s;
            } else if depth >= plane(ch.length) {
                grid.regions[n] = Region::Channel(id);
                grid.sigma_e[n] = sigma_loss;
            } else {
                grid.regions[n] = Region::Lens;
                grid.sigma_e[n] = sigma_loss;
            }
            assigned = true;
            break;
        }
        if assigned {
            continue;
        }
        for d in &geometry.dummy_segments {
            let normal = d.outward_normal(interior);
            let off = (p - d.start).dot(normal);
            let (_, t) = segment_distance(p, d.start, d.end);
            if off > 0.0 && off <= abs_len && t > 0.0 && t < 1.0 {
                let s = graded(sigma_abs, off / abs_len, order);
                grid.regions[n] = Region::Absorber(d.id as u16);
                grid.sigma_e[n] = sigma_loss + s;
                grid.sigma_m[n] = s;
                assigned = true;
                break;
            }
        }
        if !assigned {
            grid.kinds[n] = CellKind::Conductor;
            grid.regions[n] = Region::Wall;
            grid.sigma_e[n] = 0.0;
        }
    }

    for ch in &channels {
        let reference = plane(ch.length);
        let clean = ch.length - abs_len;
        let source_depth = clean - 0.25 * lg;
        let source = source_line(&grid, ch.seg, source_depth);
        if source.is_empty() {
            return Err(Error::Degenerate(format!(
                "port {} has no grid nodes at depth {:.3e} m",
                ch.seg.id, source_depth
            )));
        }
        // an axis-aligned channel of m interior nodes sees its walls (m + 1) cells apart
        let width = if ch.seg.axis.y == 0.0 {
            (source.len() + 1) as f64 * dx
        } else {
            ch.seg.width
        };
        let source = mode_weights(&grid, ch.seg, &source, width);
        let line = |depth: f64| FaceLine {
            depth,
            taps: probe_taps(&grid, ch.seg, depth, width),
        };
        let mid = ch.seg.mouth[0].lerp(ch.seg.mouth[1], 0.5);
        grid.port_faces.push(PortFace {
            port: ch.seg.id,
            kind: ch.seg.kind,
            width,
            probes: [
                line(reference - spacing),
                line(reference),
                line(reference + spacing),
            ],
            source: FaceLine {
                depth: source_depth,
                taps: source,
            },
            source_distance: source_depth - ch.seg.depth_of(mid),
        });
    }
    Ok(grid)
}

fn mode_shape(lateral: f64, width: f64) -> f64 {
    let v = (std::f64::consts::PI * lateral / width).cos();
    if lateral.abs() >= 0.5 * width {
        0.0
    } else {
        v
    }
}

fn mode_weights(
    grid: &MaterialGrid,
    seg: &PortSegment,
    nodes: &[usize],
    width: f64,
) -> Vec<(usize, f64)> {
    nodes
        .iter()
        .map(|&n| (n, mode_shape(seg.lateral_of(grid.node_position(n)), width)))
        .filter(|(_, w)| *w > 0.0)
        .collect()
}

/// Bilinear samples every half cell across the channel, projected onto the mode profile.
fn probe_taps(grid: &MaterialGrid, seg: &PortSegment, depth: f64, width: f64) -> Vec<(usize, f64)> {
    let mid = seg.mouth[0].lerp(seg.mouth[1], 0.5);
    let across = seg.axis.perp();
    let centre = mid + seg.axis * (depth - seg.depth_of(mid));
    let h = 0.5 * grid.dx;
    let count = (width / h).floor() as i64;
    let mut acc: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    let mut norm = 0.0;
    for k in -count..=count {
        let u = k as f64 * h;
        let s = mode_shape(u, width);
        if s <= 0.0 {
            continue;
        }
        norm += s * s;
        let p = centre + across * u;
        let (x, y) = grid.to_grid(p);
        let (i0, j0) = (x.floor(), y.floor());
        let (fx, fy) = (x - i0, y - j0);
        for (di, dj, b) in [
            (0, 0, (1.0 - fx) * (1.0 - fy)),
            (1, 0, fx * (1.0 - fy)),
            (0, 1, (1.0 - fx) * fy),
            (1, 1, fx * fy),
        ] {
            let (i, j) = (i0 as i64 + di, j0 as i64 + dj);
            if i < 0 || j < 0 || i >= grid.nx as i64 || j >= grid.ny as i64 || b == 0.0 {
                continue;
            }
            let n = grid.index(i as usize, j as usize);
            if grid.kinds[n] == CellKind::Conductor {
                continue;
            }
            *acc.entry(n).or_default() += s * b;
        }
    }
    acc.into_iter().map(|(n, w)| (n, w / norm)).collect()
}

/// Dielectric nodes of a channel lying within half a cell of the given depth.
fn source_line(grid: &MaterialGrid, seg: &PortSegment, depth: f64) -> Vec<usize> {
    let half = 0.5 * grid.dx;
    let mut pts = seg.outline.clone();
    pts.push(seg.mouth[0].lerp(seg.mouth[1], 0.5) + seg.axis * depth);
    let (mut i0, mut j0, mut i1, mut j1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in pts {
        let (x, y) = grid.to_grid(p);
        i0 = i0.min(x);
        j0 = j0.min(y);
        i1 = i1.max(x);
        j1 = j1.max(y);
    }
    let clampi = |v: f64, n: usize| (v.max(0.0) as usize).min(n - 1);
    let mut nodes = Vec::new();
    for j in clampi(j0.floor(), grid.ny)..=clampi(j1.ceil(), grid.ny) {
        for i in clampi(i0.floor(), grid.nx)..=clampi(i1.ceil(), grid.nx) {
            let n = grid.index(i, j);
            if grid.kinds[n] != CellKind::Dielectric {
                continue;
            }
            let p = grid.node_position(n);
            if !point_in_polygon(p, &seg.outline) {
                continue;
            }
            if (seg.depth_of(p) - depth).abs() <= half {
                nodes.push(n);
            }
        }
    }
    nodes
}
