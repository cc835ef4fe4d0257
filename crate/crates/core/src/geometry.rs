//! Model domains: interval, rectangle, unit disk and rasterised grid masks.
//! Each carries interior quadrature, boundary nodes with σ-weights and
//! inward normals, and an exact distance-to-boundary evaluator.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{PhidError, Result};
use crate::quad::{gauss_legendre_on, tanh_sinh_rule};

pub type Point = [f64; 2];

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[inline]
pub fn norm(a: Point) -> f64 {
    (a[0] * a[0] + a[1] * a[1]).sqrt()
}

/// Rasterised domain on a uniform cell grid.  Cells whose centres satisfy the
/// predicate are interior nodes; exterior cells sharing a face with an
/// interior cell are the Dirichlet (ghost) boundary nodes.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridMask {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub inside: Vec<bool>,
    /// What the mask rasterises, for reports.
    pub label: String,
}

impl GridMask {
    /// n × n cells over [−1,1]², interior = open unit disk.
    pub fn disk(n: usize) -> Self {
        let h = 2.0 / n as f64;
        let mut inside = vec![false; n * n];
        for j in 0..n {
            for i in 0..n {
                let x = -1.0 + (i as f64 + 0.5) * h;
                let y = -1.0 + (j as f64 + 0.5) * h;
                inside[j * n + i] = x * x + y * y < 1.0;
            }
        }
        Self { nx: n, ny: n, x0: -1.0, y0: -1.0, h, inside, label: format!("disk{n}x{n}") }
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        [self.x0 + (i as f64 + 0.5) * self.h, self.y0 + (j as f64 + 0.5) * self.h]
    }

    pub fn is_inside(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny && self.inside[j as usize * self.nx + i as usize]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Interval { length: f64 },
    Rectangle { a: f64, b: f64 },
    Disk,
    GridMask { mask: GridMask },
}

/// Boundary point with its inward unit normal, signed curvature (positive
/// for convex) and σ-weight when it belongs to a quadrature rule.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryPoint {
    pub z: Point,
    pub normal: Point,
    pub curvature: f64,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct DomainGeometry {
    pub shape: Shape,
    pub dim: usize,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub delta: Vec<f64>,
    pub boundary: Vec<BoundaryPoint>,
    pub diam: f64,
    pub volume: f64,
    pub perimeter: f64,
    pub inradius: f64,
    /// Mean node spacing (|D|/#nodes)^{1/d}.
    pub spacing: f64,
    /// For grid masks: (i, j) index of each interior node and the ghost index
    /// of each boundary node together with its interior neighbour.
    pub grid_index: Vec<(usize, usize)>,
    pub ghost_links: Vec<(usize, usize)>,
}

/// Resolution parameters of the interior and boundary rules.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct RuleSize {
    pub n_radial: usize,
    pub n_angular: usize,
    pub n_boundary: usize,
}

impl DomainGeometry {
    pub fn interval(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0) || n < 2 {
            return Err(PhidError::Invalid("interval needs positive length and ≥ 2 nodes".into()));
        }
        let (x, w) = gauss_legendre_on(n, 0.0, length);
        let nodes: Vec<Point> = x.iter().map(|&x| [x, 0.0]).collect();
        let delta = x.iter().map(|&x| x.min(length - x)).collect();
        let boundary = vec![
            BoundaryPoint { z: [0.0, 0.0], normal: [1.0, 0.0], curvature: 0.0, weight: 1.0 },
            BoundaryPoint { z: [length, 0.0], normal: [-1.0, 0.0], curvature: 0.0, weight: 1.0 },
        ];
        Ok(Self {
            shape: Shape::Interval { length },
            dim: 1,
            spacing: length / n as f64,
            nodes,
            weights: w,
            delta,
            boundary,
            diam: length,
            volume: length,
            perimeter: 2.0,
            inradius: 0.5 * length,
            grid_index: vec![],
            ghost_links: vec![],
        })
    }

    pub fn rectangle(a: f64, b: f64, nx: usize, ny: usize, n_boundary: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || nx < 2 || ny < 2 || n_boundary < 8 {
            return Err(PhidError::Invalid("rectangle needs positive sides and enough nodes".into()));
        }
        let (xs, wx) = gauss_legendre_on(nx, 0.0, a);
        let (ys, wy) = gauss_legendre_on(ny, 0.0, b);
        let mut nodes = Vec::with_capacity(nx * ny);
        let mut weights = Vec::with_capacity(nx * ny);
        for (j, &y) in ys.iter().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                nodes.push([x, y]);
                weights.push(wx[i] * wy[j]);
            }
        }
        let shape = Shape::Rectangle { a, b };
        let per = 2.0 * (a + b);
        let mut boundary = Vec::new();
        // Gauss nodes on each edge, counts proportional to edge length
        let edges: [(Point, Point, Point, f64); 4] = [
            ([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], a),
            ([a, 0.0], [0.0, 1.0], [-1.0, 0.0], b),
            ([a, b], [-1.0, 0.0], [0.0, -1.0], a),
            ([0.0, b], [0.0, -1.0], [1.0, 0.0], b),
        ];
        for (p0, dir, nrm, len) in edges {
            let m = ((n_boundary as f64 * len / per).ceil() as usize).max(2);
            let (u, w) = gauss_legendre_on(m, 0.0, len);
            for (u, w) in u.iter().zip(&w) {
                boundary.push(BoundaryPoint {
                    z: [p0[0] + u * dir[0], p0[1] + u * dir[1]],
                    normal: nrm,
                    curvature: 0.0,
                    weight: *w,
                });
            }
        }
        let mut g = Self {
            shape,
            dim: 2,
            spacing: (a * b / (nx * ny) as f64).sqrt(),
            nodes,
            weights,
            delta: vec![],
            boundary,
            diam: (a * a + b * b).sqrt(),
            volume: a * b,
            perimeter: per,
            inradius: 0.5 * a.min(b),
            grid_index: vec![],
            ghost_links: vec![],
        };
        g.delta = g.nodes.iter().map(|&x| g.delta_at(x)).collect();
        Ok(g)
    }

    /// Unit disk: Gauss–Legendre in r (weight r) × uniform θ, boundary
    /// nodes uniform in θ.
    pub fn disk(size: RuleSize) -> Result<Self> {
        let RuleSize { n_radial, n_angular, n_boundary } = size;
        if n_radial < 2 || n_angular < 4 || n_boundary < 4 {
            return Err(PhidError::Invalid("disk rule too small".into()));
        }
        let (rs, wr) = gauss_legendre_on(n_radial, 0.0, 1.0);
        let dth = 2.0 * PI / n_angular as f64;
        let mut nodes = Vec::with_capacity(n_radial * n_angular);
        let mut weights = Vec::with_capacity(n_radial * n_angular);
        for k in 0..n_angular {
            let th = (k as f64 + 0.5) * dth;
            let (s, c) = th.sin_cos();
            for (r, w) in rs.iter().zip(&wr) {
                nodes.push([r * c, r * s]);
                weights.push(w * r * dth);
            }
        }
        let dtb = 2.0 * PI / n_boundary as f64;
        let boundary = (0..n_boundary)
            .map(|k| {
                let (s, c) = (k as f64 * dtb).sin_cos();
                BoundaryPoint { z: [c, s], normal: [-c, -s], curvature: 1.0, weight: dtb }
            })
            .collect();
        let delta = nodes.iter().map(|&x| 1.0 - norm(x)).collect();
        Ok(Self {
            shape: Shape::Disk,
            dim: 2,
            spacing: (PI / nodes.len() as f64).sqrt(),
            nodes,
            weights,
            delta,
            boundary,
            diam: 2.0,
            volume: PI,
            perimeter: 2.0 * PI,
            inradius: 1.0,
            grid_index: vec![],
            ghost_links: vec![],
        })
    }

    pub fn grid_mask(mask: GridMask) -> Result<Self> {
        let h = mask.h;
        let mut nodes = Vec::new();
        let mut grid_index = Vec::new();
        for j in 0..mask.ny {
            for i in 0..mask.nx {
                if mask.inside[j * mask.nx + i] {
                    nodes.push(mask.center(i, j));
                    grid_index.push((i, j));
                }
            }
        }
        if nodes.is_empty() {
            return Err(PhidError::Invalid("grid mask has no interior cells".into()));
        }
        // each (interior node, exterior neighbour) face carries a ghost node
        let mut boundary = Vec::new();
        let mut ghost_links = Vec::new();
        for (n, &(i, j)) in grid_index.iter().enumerate() {
            for (di, dj) in [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)] {
                let (gi, gj) = (i as isize + di, j as isize + dj);
                if !mask.is_inside(gi, gj) {
                    let z = [mask.x0 + (gi as f64 + 0.5) * h, mask.y0 + (gj as f64 + 0.5) * h];
                    ghost_links.push((boundary.len(), n));
                    boundary.push(BoundaryPoint { z, normal: [-(di as f64), -(dj as f64)], curvature: 0.0, weight: h });
                }
            }
        }
        let volume = nodes.len() as f64 * h * h;
        let mut g = Self {
            shape: Shape::GridMask { mask },
            dim: 2,
            spacing: h,
            weights: vec![h * h; nodes.len()],
            nodes,
            delta: vec![],
            perimeter: boundary.len() as f64 * h,
            boundary,
            diam: 0.0,
            volume,
            inradius: 0.0,
            grid_index,
            ghost_links,
        };
        g.delta = g.nodes.iter().map(|&x| g.delta_at(x)).collect();
        g.inradius = g.delta.iter().cloned().fold(0.0, f64::max);
        let zs: Vec<Point> = g.boundary.iter().map(|b| b.z).collect();
        let mut d: f64 = 0.0;
        for a in &zs {
            for b in &zs {
                d = d.max(dist(*a, *b));
            }
        }
        g.diam = d;
        Ok(g)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, x: Point) -> bool {
        match &self.shape {
            Shape::Interval { length } => x[0] > 0.0 && x[0] < *length,
            Shape::Rectangle { a, b } => x[0] > 0.0 && x[0] < *a && x[1] > 0.0 && x[1] < *b,
            Shape::Disk => norm(x) < 1.0,
            Shape::GridMask { mask } => {
                let i = ((x[0] - mask.x0) / mask.h).floor() as isize;
                let j = ((x[1] - mask.y0) / mask.h).floor() as isize;
                mask.is_inside(i, j)
            }
        }
    }

    /// δ_D(x).  Grid masks measure the distance to the nearest ghost node.
    pub fn delta_at(&self, x: Point) -> f64 {
        match &self.shape {
            Shape::Interval { length } => x[0].min(length - x[0]).max(0.0),
            Shape::Rectangle { a, b } => x[0].min(a - x[0]).min(x[1]).min(b - x[1]).max(0.0),
            Shape::Disk => (1.0 - norm(x)).max(0.0),
            Shape::GridMask { .. } => {
                if !self.contains(x) {
                    return 0.0;
                }
                self.boundary.iter().map(|b| dist(b.z, x)).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Nearest boundary point with inward normal and curvature.
    pub fn nearest_boundary(&self, x: Point) -> BoundaryPoint {
        match &self.shape {
            Shape::Interval { length } => {
                if x[0] <= 0.5 * length {
                    self.boundary[0]
                } else {
                    self.boundary[1]
                }
            }
            Shape::Rectangle { a, b } => {
                let c = [(x[0], [0.0, x[1]], [1.0, 0.0]), (a - x[0], [*a, x[1]], [-1.0, 0.0]), (x[1], [x[0], 0.0], [0.0, 1.0]), (b - x[1], [x[0], *b], [0.0, -1.0])];
                let m = c.iter().min_by(|p, q| p.0.partial_cmp(&q.0).unwrap()).unwrap();
                BoundaryPoint { z: m.1, normal: m.2, curvature: 0.0, weight: 0.0 }
            }
            Shape::Disk => {
                let r = norm(x);
                let u = if r > 1e-300 { [x[0] / r, x[1] / r] } else { [1.0, 0.0] };
                BoundaryPoint { z: u, normal: [-u[0], -u[1]], curvature: 1.0, weight: 0.0 }
            }
            Shape::GridMask { .. } => *self
                .boundary
                .iter()
                .min_by(|p, q| dist(p.z, x).partial_cmp(&dist(q.z, x)).unwrap())
                .unwrap(),
        }
    }

    /// Distance from interior x to ∂D along the unit direction u.
    pub fn ray_exit(&self, x: Point, u: Point) -> f64 {
        match &self.shape {
            Shape::Interval { length } => {
                if u[0] > 0.0 {
                    (length - x[0]) / u[0]
                } else if u[0] < 0.0 {
                    -x[0] / u[0]
                } else {
                    f64::INFINITY
                }
            }
            Shape::Rectangle { a, b } => {
                let mut t = f64::INFINITY;
                for (p, d, lo, hi) in [(x[0], u[0], 0.0, *a), (x[1], u[1], 0.0, *b)] {
                    if d > 0.0 {
                        t = t.min((hi - p) / d);
                    } else if d < 0.0 {
                        t = t.min((lo - p) / d);
                    }
                }
                t.max(0.0)
            }
            Shape::Disk => {
                // |x + t u| = 1
                let b = x[0] * u[0] + x[1] * u[1];
                let c = x[0] * x[0] + x[1] * x[1] - 1.0;
                (-b + (b * b - c).max(0.0).sqrt()).max(0.0)
            }
            Shape::GridMask { mask } => {
                let step = 0.25 * mask.h;
                let mut t = 0.0;
                while self.contains([x[0] + (t + step) * u[0], x[1] + (t + step) * u[1]]) {
                    t += step;
                }
                t
            }
        }
    }

    /// Boundary rule refined toward the boundary point nearest to x, for
    /// integrands that concentrate there (Poisson kernels near ∂D).
    /// Falls back to the stored nodes when the shape has no parametrisation.
    pub fn boundary_rule_near(&self, x: Point, base: usize) -> Vec<BoundaryPoint> {
        match &self.shape {
            Shape::Disk => {
                let d = self.delta_at(x).max(1e-12);
                let th0 = x[1].atan2(x[0]);
                let mut out = Vec::new();
                for side in [-1.0, 1.0] {
                    for (a, b) in graded_panels(PI, (0.25 * d).min(PI / 8.0), 2.0) {
                        let (us, ws) = gauss_legendre_on(10, a, b);
                        for (u, w) in us.iter().zip(&ws) {
                            let th = th0 + side * u;
                            let (s, c) = th.sin_cos();
                            out.push(BoundaryPoint { z: [c, s], normal: [-c, -s], curvature: 1.0, weight: *w });
                        }
                    }
                }
                let _ = base;
                out
            }
            Shape::Rectangle { a, b } => {
                let d = self.delta_at(x).max(1e-12);
                let nb = self.nearest_boundary(x).z;
                let per = 2.0 * (a + b);
                // arclength coordinate of the nearest point
                let s0 = rect_arclength(*a, *b, nb);
                let mut out = Vec::new();
                let corners = [0.0, *a, a + b, 2.0 * a + b, per];
                for side in [-1.0, 1.0] {
                    for (lo, hi) in graded_panels(0.5 * per, (0.25 * d).min(0.05 * per), 2.0) {
                        // split panels at corners so each piece is a straight edge
                        let (p, q) = (s0 + side * lo, s0 + side * hi);
                        let (p, q) = if p < q { (p, q) } else { (q, p) };
                        let mut cuts = vec![p];
                        for k in -1..=1 {
                            for c in corners {
                                let c = c + k as f64 * per;
                                if c > p && c < q {
                                    cuts.push(c);
                                }
                            }
                        }
                        cuts.push(q);
                        cuts.sort_by(|u, v| u.partial_cmp(v).unwrap());
                        for w in cuts.windows(2) {
                            let (us, ws) = gauss_legendre_on(8, w[0], w[1]);
                            for (u, wt) in us.iter().zip(&ws) {
                                let (z, n) = rect_point(*a, *b, u.rem_euclid(per));
                                out.push(BoundaryPoint { z, normal: n, curvature: 0.0, weight: *wt });
                            }
                        }
                    }
                }
                let _ = base;
                out
            }
            _ => self.boundary.clone(),
        }
    }

    /// Quadrature graded toward ∂D for integrands with δ^{−a} singularities
    /// (a < 1).  Disk: tanh-sinh in r × uniform θ.  Rectangle: tanh-sinh
    /// tensor.  Interval: tanh-sinh.  Grid masks return the cell rule.
    pub fn graded_rule(&self, h: f64, n_angular: usize) -> Vec<(Point, f64, f64)> {
        match &self.shape {
            Shape::Disk => {
                let rule = tanh_sinh_rule(0.0, 1.0, h);
                let dth = 2.0 * PI / n_angular as f64;
                let mut out = Vec::new();
                for k in 0..n_angular {
                    let (s, c) = ((k as f64 + 0.5) * dth).sin_cos();
                    for &(r, w, dend) in &rule {
                        // distance to the boundary is 1 − r, exact near r = 1
                        let delta = if r > 0.5 { dend } else { 1.0 - r };
                        out.push(([r * c, r * s], w * r * dth, delta));
                    }
                }
                out
            }
            Shape::Rectangle { a, b } => {
                let rx = tanh_sinh_rule(0.0, *a, h);
                let ry = tanh_sinh_rule(0.0, *b, h);
                let mut out = Vec::new();
                for &(y, wy, dy) in &ry {
                    for &(x, wx, dx) in &rx {
                        out.push(([x, y], wx * wy, dx.min(dy)));
                    }
                }
                out
            }
            Shape::Interval { length } => {
                tanh_sinh_rule(0.0, *length, h).into_iter().map(|(x, w, d)| ([x, 0.0], w, d)).collect()
            }
            Shape::GridMask { .. } => {
                self.nodes.iter().zip(&self.weights).zip(&self.delta).map(|((p, w), d)| (*p, *w, *d)).collect()
            }
        }
    }

    /// Quadrature for the collar {δ ≤ t}: (point, weight, δ).  Disk and
    /// interval use exact δ-coordinates; the rectangle splits into four
    /// strips; grid masks fall back to the cell rule.
    pub fn collar_rule(&self, t: f64, n_depth: usize, n_along: usize) -> Vec<(Point, f64, f64)> {
        let (dv, dw) = gauss_legendre_on(n_depth, 0.0, t.min(self.inradius));
        match &self.shape {
            Shape::Disk => {
                let dth = 2.0 * PI / n_along as f64;
                let mut out = Vec::with_capacity(n_depth * n_along);
                for k in 0..n_along {
                    let (s, c) = ((k as f64 + 0.5) * dth).sin_cos();
                    for (d, w) in dv.iter().zip(&dw) {
                        let r = 1.0 - d;
                        out.push(([r * c, r * s], w * r * dth, *d));
                    }
                }
                out
            }
            Shape::Interval { length } => {
                let mut out = Vec::new();
                for (d, w) in dv.iter().zip(&dw) {
                    out.push(([*d, 0.0], *w, *d));
                    out.push(([length - d, 0.0], *w, *d));
                }
                out
            }
            Shape::Rectangle { a, b } => {
                let (a, b) = (*a, *b);
                let t = t.min(0.5 * a.min(b));
                let mut out = Vec::new();
                let mut strip = |x0: f64, x1: f64, y0: f64, y1: f64| {
                    let (xs, xw) = gauss_legendre_on(if x1 - x0 > t { n_along } else { n_depth }, x0, x1);
                    let (ys, yw) = gauss_legendre_on(if y1 - y0 > t { n_along } else { n_depth }, y0, y1);
                    for (y, wy) in ys.iter().zip(&yw) {
                        for (x, wx) in xs.iter().zip(&xw) {
                            let p = [*x, *y];
                            out.push((p, wx * wy, self.delta_at(p)));
                        }
                    }
                };
                strip(0.0, a, 0.0, t);
                strip(0.0, a, b - t, b);
                strip(0.0, t, t, b - t);
                strip(a - t, a, t, b - t);
                out
            }
            Shape::GridMask { .. } => self
                .nodes
                .iter()
                .zip(&self.weights)
                .zip(&self.delta)
                .filter(|(_, d)| **d <= t)
                .map(|((p, w), d)| (*p, *w, *d))
                .collect(),
        }
    }

    /// Inward normal ray from boundary point z: `count` log-spaced points
    /// with δ from 0.3·inradius down to `floor`.
    pub fn normal_ray(&self, z: &BoundaryPoint, count: usize, floor: f64) -> Vec<Point> {
        let hi = 0.3 * self.inradius;
        let lo = floor.min(hi * 0.5);
        (0..count)
            .map(|k| {
                let t = hi * (lo / hi).powf(k as f64 / (count.max(2) - 1) as f64);
                [z.z[0] + t * z.normal[0], z.z[1] + t * z.normal[1]]
            })
            .collect()
    }

    /// Node indices lying within `tol` of the inward normal line through z,
    /// sorted by decreasing δ.
    pub fn nodes_on_normal(&self, z: &BoundaryPoint, tol: f64) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| {
                let p = self.nodes[i];
                let d = [p[0] - z.z[0], p[1] - z.z[1]];
                let along = d[0] * z.normal[0] + d[1] * z.normal[1];
                let perp = (d[0] * z.normal[1] - d[1] * z.normal[0]).abs();
                along > 0.0 && perp <= tol
            })
            .collect();
        v.sort_by(|&a, &b| self.delta[b].partial_cmp(&self.delta[a]).unwrap());
        v
    }
}

/// Panels on [0, total] growing geometrically by `ratio` from width `first`.
fn graded_panels(total: f64, first: f64, ratio: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut a = 0.0;
    let mut w = first;
    while a < total {
        let b = (a + w).min(total);
        out.push((a, b));
        a = b;
        w *= ratio;
    }
    out
}

fn rect_arclength(a: f64, b: f64, z: Point) -> f64 {
    let eps = 1e-12;
    if z[1].abs() < eps {
        z[0]
    } else if (z[0] - a).abs() < eps {
        a + z[1]
    } else if (z[1] - b).abs() < eps {
        a + b + (a - z[0])
    } else {
        2.0 * a + b + (b - z[1])
    }
}

fn rect_point(a: f64, b: f64, s: f64) -> (Point, Point) {
    if s < a {
        ([s, 0.0], [0.0, 1.0])
    } else if s < a + b {
        ([a, s - a], [-1.0, 0.0])
    } else if s < 2.0 * a + b {
        ([a - (s - a - b), b], [0.0, -1.0])
    } else {
        ([0.0, b - (s - 2.0 * a - b)], [1.0, 0.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_rule_integrates_area_and_perimeter() {
        let g = DomainGeometry::disk(RuleSize { n_radial: 20, n_angular: 32, n_boundary: 40 }).unwrap();
        let a: f64 = g.weights.iter().sum();
        assert!((a - PI).abs() < 1e-12);
        let p: f64 = g.boundary.iter().map(|b| b.weight).sum();
        assert!((p - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn refined_boundary_rules_measure_the_boundary() {
        let g = DomainGeometry::disk(RuleSize { n_radial: 20, n_angular: 32, n_boundary: 40 }).unwrap();
        let r = g.boundary_rule_near([0.0, 0.999], 40);
        let p: f64 = r.iter().map(|b| b.weight).sum();
        assert!((p - 2.0 * PI).abs() < 1e-10);
        let g = DomainGeometry::rectangle(2.0, 1.0, 10, 10, 40).unwrap();
        let r = g.boundary_rule_near([1.3, 0.01], 40);
        let p: f64 = r.iter().map(|b| b.weight).sum();
        assert!((p - 6.0).abs() < 1e-10);
    }

    #[test]
    fn ray_exit_hits_circle() {
        let g = DomainGeometry::disk(RuleSize { n_radial: 4, n_angular: 8, n_boundary: 8 }).unwrap();
        let t = g.ray_exit([0.5, 0.0], [1.0, 0.0]);
        assert!((t - 0.5).abs() < 1e-15);
        let t = g.ray_exit([0.5, 0.0], [-1.0, 0.0]);
        assert!((t - 1.5).abs() < 1e-15);
    }
}
