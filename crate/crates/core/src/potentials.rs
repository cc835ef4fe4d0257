//! Green potentials of interior measures, Poisson integrals of boundary
//! measures, and the boundary-behaviour functionals built on them:
//! pointwise ratios to P_φσ along normal rays, weak traces over collars
//! {δ ≤ t}, and the two-sided bound for G_φ[U(δ)].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PhidError, Result};
use crate::geometry::{dist, BoundaryPoint, DomainGeometry, Point};
use crate::kernels::{KernelSet, Potential, Route, SigmaRoute};
use crate::quad::{adaptive_log, adaptive_to_inf};
use crate::special::upper_gamma;

/// Signed interior datum: a density on the quadrature nodes plus atoms.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct InteriorMeasure {
    pub density: Vec<f64>,
    pub atoms: Vec<(Point, f64)>,
}

impl InteriorMeasure {
    pub fn zero(geom: &DomainGeometry) -> Self {
        Self { density: vec![0.0; geom.nodes.len()], atoms: vec![] }
    }

    pub fn from_fn(geom: &DomainGeometry, f: impl Fn(Point) -> f64) -> Self {
        Self { density: geom.nodes.iter().map(|&x| f(x)).collect(), atoms: vec![] }
    }

    pub fn dirac(geom: &DomainGeometry, x: Point, w: f64) -> Self {
        Self { density: vec![0.0; geom.nodes.len()], atoms: vec![(x, w)] }
    }

    pub fn validate(&self, geom: &DomainGeometry) -> Result<()> {
        if self.density.len() != geom.nodes.len() {
            return Err(PhidError::Invalid(format!(
                "density has {} values for {} nodes",
                self.density.len(),
                geom.nodes.len()
            )));
        }
        if self.density.iter().any(|v| !v.is_finite()) {
            return Err(PhidError::Invalid("density is not finite".into()));
        }
        for (x, w) in &self.atoms {
            if !(geom.delta_at(*x) > 0.0) || !geom.contains(*x) || !w.is_finite() {
                return Err(PhidError::Domain(format!("atom at {x:?} is not strictly interior")));
            }
        }
        Ok(())
    }

    /// ∫δ d|λ|.
    pub fn delta_variation(&self, geom: &DomainGeometry) -> f64 {
        let dens: f64 = self.density.iter().zip(&geom.weights).zip(&geom.delta).map(|((r, w), d)| r.abs() * w * d).sum();
        dens + self.atoms.iter().map(|(x, w)| w.abs() * geom.delta_at(*x)).sum::<f64>()
    }
}

/// Signed boundary datum: a density against σ on the boundary nodes plus
/// atoms sitting on boundary nodes.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BoundaryMeasure {
    pub density: Vec<f64>,
    pub atoms: Vec<(usize, f64)>,
}

impl BoundaryMeasure {
    pub fn from_fn(geom: &DomainGeometry, f: impl Fn(&BoundaryPoint) -> f64) -> Self {
        Self { density: geom.boundary.iter().map(f).collect(), atoms: vec![] }
    }

    pub fn sigma(geom: &DomainGeometry) -> Self {
        Self::from_fn(geom, |_| 1.0)
    }

    pub fn dirac(geom: &DomainGeometry, node: usize, w: f64) -> Self {
        Self { density: vec![0.0; geom.boundary.len()], atoms: vec![(node, w)] }
    }

    pub fn validate(&self, geom: &DomainGeometry) -> Result<()> {
        if self.density.len() != geom.boundary.len() {
            return Err(PhidError::Invalid(format!(
                "boundary density has {} values for {} nodes",
                self.density.len(),
                geom.boundary.len()
            )));
        }
        if self.atoms.iter().any(|&(i, _)| i >= geom.boundary.len()) {
            return Err(PhidError::Domain("boundary atom off the boundary node set".into()));
        }
        if self.density.iter().chain(self.atoms.iter().map(|(_, w)| w)).any(|v| !v.is_finite()) {
            return Err(PhidError::Invalid("boundary measure is not finite".into()));
        }
        Ok(())
    }

    pub fn total_variation(&self, geom: &DomainGeometry) -> f64 {
        let dens: f64 = self.density.iter().zip(&geom.boundary).map(|(r, b)| r.abs() * b.weight).sum();
        dens + self.atoms.iter().map(|(_, w)| w.abs()).sum::<f64>()
    }

    /// Density at an arbitrary boundary point: linear between the two
    /// nearest boundary nodes.
    pub fn density_at(&self, geom: &DomainGeometry, z: Point) -> f64 {
        let (mut i1, mut d1, mut i2, mut d2) = (0, f64::INFINITY, 0, f64::INFINITY);
        for (i, b) in geom.boundary.iter().enumerate() {
            let d = dist(z, b.z);
            if d < d1 {
                (i2, d2) = (i1, d1);
                (i1, d1) = (i, d);
            } else if d < d2 {
                (i2, d2) = (i, d);
            }
        }
        if d1 == 0.0 || !d2.is_finite() {
            return self.density[i1];
        }
        (self.density[i1] * d2 + self.density[i2] * d1) / (d1 + d2)
    }
}

/// Catalog shapes for U.  `PowerLog` is t^{−β}(1 + log⁺(1/t))^r, which
/// stays positive on (0, ∞).
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UKind {
    Power { beta: f64 },
    PowerLog { beta: f64, r: f64 },
    Bounded { c: f64 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Condition {
    pub holds: bool,
    pub constant: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct UProfile {
    pub kind: UKind,
    /// ∫₀¹U(t)t dt < ∞, with the value as constant (∞ when it fails).
    pub u1: Condition,
    /// U(t) ≤ C U(s) for 0 < s ≤ t ≤ 1.
    pub u2: Condition,
    /// U(t) ≤ C U(2t) for t ∈ (0, 1).
    pub u3: Condition,
    /// sup_{t ≥ c} U(t) with c = 1.
    pub u4: Condition,
    pub int_ut: f64,
}

impl UProfile {
    pub fn new(kind: UKind) -> Result<Self> {
        match kind {
            UKind::Power { beta } | UKind::PowerLog { beta, .. } if !beta.is_finite() => {
                return Err(PhidError::Invalid("β must be finite".into()))
            }
            UKind::Bounded { c } if !(c >= 0.0 && c.is_finite()) => {
                return Err(PhidError::Invalid("bounded profile needs c ≥ 0".into()))
            }
            _ => {}
        }
        let int_ut = Self::int_ut_closed(kind);
        let mut p = Self {
            kind,
            u1: Condition { holds: int_ut.is_finite(), constant: int_ut },
            u2: Condition { holds: false, constant: f64::INFINITY },
            u3: Condition { holds: false, constant: f64::INFINITY },
            u4: Condition { holds: false, constant: f64::INFINITY },
            int_ut,
        };
        // constants by sampling a log grid; growth toward the bottom of the
        // grid marks the condition as failing
        let grid: Vec<f64> = (0..=480).map(|k| 10f64.powf(-12.0 * k as f64 / 480.0)).collect();
        // sup over s ≤ t ≤ 1 of U(t)/U(s), walking up from the smallest t
        let ratio_sup = |lo: usize| {
            let mut run_min = f64::INFINITY;
            let mut sup: f64 = 0.0;
            for &t in grid[..lo].iter().rev() {
                let u = p.eval(t);
                run_min = run_min.min(u);
                sup = sup.max(u / run_min);
            }
            sup
        };
        let c2_full = ratio_sup(grid.len());
        let c2_half = ratio_sup(grid.len() / 2);
        p.u2 = Condition { holds: c2_full <= 1.0001 * c2_half.max(1.0) && c2_full.is_finite(), constant: c2_full };
        let doubling = |lo: usize| grid[..lo].iter().map(|&t| p.eval(t.min(0.5)) / p.eval(2.0 * t.min(0.5))).fold(0.0, f64::max);
        let c3_full = doubling(grid.len());
        let c3_half = doubling(grid.len() / 2);
        p.u3 = Condition { holds: c3_full.is_finite() && c3_full <= 1.0001 * c3_half, constant: c3_full };
        let tail: Vec<f64> = (0..=200).map(|k| p.eval(10f64.powf(6.0 * k as f64 / 200.0))).collect();
        let sup4 = tail.iter().cloned().fold(0.0, f64::max);
        p.u4 = Condition { holds: sup4.is_finite(), constant: sup4 };
        Ok(p)
    }

    fn int_ut_closed(kind: UKind) -> f64 {
        match kind {
            UKind::Bounded { c } => 0.5 * c,
            UKind::Power { beta } => {
                if beta < 2.0 {
                    1.0 / (2.0 - beta)
                } else {
                    f64::INFINITY
                }
            }
            // ∫₀^∞ e^{−a u}(1+u)^r du with a = 2 − β
            UKind::PowerLog { beta, r } => {
                let a = 2.0 - beta;
                if a > 0.0 {
                    if r == 0.0 {
                        1.0 / a
                    } else {
                        a.exp() * a.powf(-(r + 1.0)) * upper_gamma(r + 1.0, a)
                    }
                } else if a == 0.0 && r < -1.0 {
                    1.0 / (-r - 1.0)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            UKind::Bounded { c } => c,
            UKind::Power { beta } => t.powf(-beta),
            UKind::PowerLog { beta, r } => t.powf(-beta) * (1.0 + (1.0 / t).ln().max(0.0)).powf(r),
        }
    }

    pub fn all_hold(&self) -> bool {
        self.u1.holds && self.u2.holds && self.u3.holds && self.u4.holds
    }

    /// ∫₀^a U(t)t dt.
    pub fn int_ut_upto(&self, a: f64) -> Result<f64> {
        if !self.u1.holds {
            return Ok(f64::INFINITY);
        }
        match self.kind {
            UKind::Bounded { c } => Ok(0.5 * c * a * a),
            UKind::Power { beta } => Ok(a.powf(2.0 - beta) / (2.0 - beta)),
            UKind::PowerLog { .. } => {
                // t = a e^{−v}
                let q = adaptive_to_inf(|v| { let t = a * (-v).exp(); self.eval(t) * t * t }, 0.0, 1e-300, 1e-11)?;
                Ok(q.value)
            }
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            UKind::Bounded { c } => format!("const{c}"),
            UKind::Power { beta } => format!("t^-{beta}"),
            UKind::PowerLog { beta, r } => format!("t^-{beta}log^{r}"),
        }
    }
}

/// G_φλ as a function: spectral part from the density coefficients, atoms
/// by direct kernel evaluation.
#[derive(Clone, Debug)]
pub struct GreenPotential {
    pub coef: Vec<f64>,
    pub atoms: Vec<(Point, f64)>,
    pub values: Vec<f64>,
    /// Nodes that coincide with an atom; their value is +∞·sign.
    pub diagonal_nodes: Vec<usize>,
    /// ‖G_φλ‖_{L¹(δ)} / ∫δ d|λ| over the non-diagonal nodes.
    pub constant: f64,
}

impl GreenPotential {
    pub fn at(&self, ks: &KernelSet, x: Point) -> f64 {
        let fx = ks.modes_at(x);
        self.at_modes(ks, &fx, x)
    }

    pub fn at_modes(&self, ks: &KernelSet, fx: &[f64], x: Point) -> f64 {
        let dens: f64 = self.coef.iter().zip(fx).map(|(c, f)| c * f).sum();
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|&(y, w)| w * ks.green_modes(Potential::Phi, fx, &ks.modes_at(y), x, y, Route::Subordination))
            .sum();
        dens + atoms
    }
}

pub fn green_potential(ks: &KernelSet, lam: &InteriorMeasure) -> Result<GreenPotential> {
    let s = &ks.spectrum;
    let g = &s.geom;
    lam.validate(g)?;
    let c = s.coefficients(&lam.density);
    let coef: Vec<f64> = c.coef.iter().zip(&ks.phi_l).map(|(a, p)| a / p).collect();
    let mut values = s.synthesize(&coef);
    let mut diagonal_nodes = Vec::new();
    for &(y, w) in &lam.atoms {
        if w == 0.0 {
            continue;
        }
        let fy = ks.modes_at(y);
        let col: Vec<f64> = (0..g.nodes.len())
            .into_par_iter()
            .map(|i| {
                let fx: Vec<f64> = s.node_values.iter().map(|v| v[i]).collect();
                ks.green_modes(Potential::Phi, &fx, &fy, g.nodes[i], y, Route::Subordination)
            })
            .collect();
        for (i, v) in col.into_iter().enumerate() {
            if v.is_infinite() {
                diagonal_nodes.push(i);
            }
            values[i] += w * v;
        }
    }
    let norm: f64 = (0..g.nodes.len())
        .filter(|i| !diagonal_nodes.contains(i))
        .map(|i| values[i].abs() * g.weights[i] * g.delta[i])
        .sum();
    let tv = lam.delta_variation(g);
    let constant = if tv > 0.0 { norm / tv } else { 0.0 };
    Ok(GreenPotential { coef, atoms: lam.atoms.clone(), values, diagonal_nodes, constant })
}

/// P_φζ as a function: large-time part from boundary moments, small-time
/// part on a boundary rule refined toward the evaluation point, atoms by
/// direct kernel evaluation.
#[derive(Clone, Debug)]
pub struct PoissonIntegral {
    pub zeta: BoundaryMeasure,
    pub moments: Vec<f64>,
    pub values: Vec<f64>,
    /// ‖P_φζ‖_{L¹(δ)} / ‖ζ‖.
    pub constant: f64,
}

impl PoissonIntegral {
    pub fn at(&self, ks: &KernelSet, x: Point) -> f64 {
        self.at_modes(ks, &ks.modes_at(x), x)
    }

    pub fn at_modes(&self, ks: &KernelSet, fx: &[f64], x: Point) -> f64 {
        let g = &ks.spectrum.geom;
        let dens = ks.poisson_integral_modes(fx, x, &self.moments, &|b: &BoundaryPoint| self.zeta.density_at(g, b.z));
        let atoms: f64 = self
            .zeta
            .atoms
            .iter()
            .map(|&(k, w)| {
                let z = g.boundary[k];
                let sl = ks.spectrum.slopes_at(&z).unwrap_or_default();
                w * ks.poisson_modes(Potential::Phi, fx, &sl, x, z.z, Route::Subordination)
            })
            .sum();
        dens + atoms
    }
}

pub fn poisson_integral(ks: &KernelSet, zeta: &BoundaryMeasure) -> Result<PoissonIntegral> {
    let s = &ks.spectrum;
    let g = &s.geom;
    zeta.validate(g)?;
    let moments = ks.boundary_moments(&zeta.density);
    let mut p = PoissonIntegral { zeta: zeta.clone(), moments, values: vec![], constant: 0.0 };
    p.values = (0..g.nodes.len())
        .into_par_iter()
        .map(|i| {
            let fx: Vec<f64> = s.node_values.iter().map(|v| v[i]).collect();
            p.at_modes(ks, &fx, g.nodes[i])
        })
        .collect();
    let norm: f64 = p.values.iter().zip(&g.weights).zip(&g.delta).map(|((v, w), d)| v.abs() * w * d).sum();
    let tv = zeta.total_variation(g);
    p.constant = if tv > 0.0 { norm / tv } else { 0.0 };
    Ok(p)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RayPoint {
    pub x: Point,
    pub delta: f64,
    pub u: f64,
    pub p_sigma: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioSequence {
    pub z: Point,
    pub points: Vec<RayPoint>,
    pub dropped: usize,
    pub notice: Option<String>,
}

impl RatioSequence {
    pub fn last_ratio(&self) -> Option<f64> {
        self.points.last().map(|p| p.ratio)
    }
}

/// u(x_k)/P_φσ(x_k) along a ray; points with δ below `floor` are dropped.
pub fn pointwise_boundary_ratio(
    ks: &KernelSet,
    u: &(dyn Fn(Point) -> f64 + Sync),
    z: Point,
    ray: &[Point],
    floor: f64,
) -> Result<RatioSequence> {
    let g = &ks.spectrum.geom;
    let kept: Vec<Point> = ray.iter().copied().filter(|&x| g.delta_at(x) >= floor).collect();
    let dropped = ray.len() - kept.len();
    let points = kept
        .par_iter()
        .map(|&x| {
            let p_sigma = ks.poisson_sigma(x, SigmaRoute::Survival)?;
            let ux = u(x);
            Ok(RayPoint { x, delta: g.delta_at(x), u: ux, p_sigma, ratio: ux / p_sigma })
        })
        .collect::<Result<Vec<_>>>()?;
    let notice = (dropped > 0).then(|| format!("{dropped} ray points below the resolution floor {floor:e} dropped"));
    Ok(RatioSequence { z, points, dropped, notice })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceReport {
    pub t: f64,
    pub value: f64,
    pub collar_nodes: usize,
    pub warning: Option<String>,
}

/// (1/t)∫_{δ ≤ t} u/P_φσ · testfn dx on the collar rule.
pub fn weak_boundary_trace(
    ks: &KernelSet,
    u: &(dyn Fn(Point) -> f64 + Sync),
    t: f64,
    testfn: &(dyn Fn(Point) -> f64 + Sync),
) -> Result<TraceReport> {
    let g = &ks.spectrum.geom;
    if !(t > 2.0 * g.spacing) {
        return Err(PhidError::Precondition {
            msg: format!("collar width t = {t:e} must exceed twice the node spacing {:e}", g.spacing),
            nodes: vec![],
        });
    }
    let collar_nodes = g.delta.iter().filter(|&&d| d <= t).count();
    let n_along = (g.boundary.len() * 2).max(128);
    let rule = g.collar_rule(t, 16, n_along);
    let parts = rule
        .par_iter()
        .filter(|(_, _, d)| *d > 0.0)
        .map(|&(x, w, _)| {
            let ps = ks.poisson_sigma(x, SigmaRoute::Survival)?;
            Ok(w * u(x) / ps * testfn(x))
        })
        .collect::<Result<Vec<f64>>>()?;
    let value = parts.iter().sum::<f64>() / t;
    let warning = (collar_nodes < 50).then(|| format!("collar δ ≤ {t:e} holds only {collar_nodes} nodes"));
    Ok(TraceReport { t, value, collar_nodes, warning })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ProfileClass {
    Finite,
    Infinite,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileBound {
    pub x: Point,
    pub delta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub class: ProfileClass,
}

/// Width of the layer where the Green kernel is corrected to vanish on ∂D.
const BOUNDARY_LAYER: f64 = 0.05;

/// Angular and radial resolution of the G_φ[U(δ)] quadrature.
#[derive(Clone, Copy, Debug)]
pub struct ProfileQuadrature {
    pub n_angular: usize,
    pub h: f64,
}

impl Default for ProfileQuadrature {
    fn default() -> Self {
        Self { n_angular: 192, h: 1.0 / 16.0 }
    }
}

/// The two sides of G_φ[U(δ)](x) ≍ (δ²φ(δ^{−2}))^{−1}∫₀^δ Ut dt + δ
/// + δ∫_δ^{diam} U(t)/(t²φ(t^{−2}))dt.
pub fn u_profile_bound(ks: &KernelSet, profile: &UProfile, x: Point, q: ProfileQuadrature) -> Result<ProfileBound> {
    let g = &ks.spectrum.geom;
    let delta = g.delta_at(x);
    if !(delta > 0.0) {
        return Err(PhidError::Domain(format!("{x:?} is not interior")));
    }
    if !profile.u1.holds {
        return Ok(ProfileBound {
            x,
            delta,
            lhs: f64::INFINITY,
            rhs: f64::INFINITY,
            ratio: f64::NAN,
            class: ProfileClass::Infinite,
        });
    }
    if !profile.all_hold() {
        return Err(PhidError::Precondition {
            msg: format!("profile {} does not satisfy U2–U4", profile.label()),
            nodes: vec![],
        });
    }
    let phi = |l: f64| ks.pair.spec.value(l);
    let fx = ks.modes_at(x);
    let lhs = ks.singular_integral(
        &[x],
        |y| {
            let d = g.delta_at(y);
            if d <= 0.0 {
                return 0.0;
            }
            let fy = ks.modes_at(y);
            let mut gxy = ks.green_modes(Potential::Phi, &fx, &fy, x, y, Route::Subordination);
            if d < BOUNDARY_LAYER {
                // the small-time image model leaves a residual value of G
                // on ∂D; remove it with a linear blend so that G vanishes
                // at the boundary as it must
                let z = g.nearest_boundary(y).z;
                let gz = ks.green_modes(Potential::Phi, &fx, &ks.modes_at(z), x, z, Route::Subordination);
                if gz.is_finite() {
                    gxy -= gz * (1.0 - d / BOUNDARY_LAYER);
                }
            }
            gxy * profile.eval(d)
        },
        q.n_angular,
        q.h,
    );
    let near = profile.int_ut_upto(delta)? / (delta * delta * phi(delta.powi(-2)));
    let far = if g.diam > delta {
        adaptive_log(|t| profile.eval(t) / (t * t * phi(t.powi(-2))), delta, g.diam, 1e-300, 1e-9)?.value
    } else {
        0.0
    };
    let rhs = near + delta + delta * far;
    Ok(ProfileBound { x, delta, lhs, rhs, ratio: lhs / rhs, class: ProfileClass::Finite })
}

/// CSV of ray ratios: `delta,u,p_sigma,ratio`.
pub fn ratio_csv(seq: &RatioSequence) -> String {
    let mut s = String::from("# delta,u,p_sigma,ratio\n");
    for p in &seq.points {
        s.push_str(&format!("{:e},{:e},{:e},{:e}\n", p.delta, p.u, p.p_sigma, p.ratio));
    }
    s
}

/// CSV of profile bounds: `delta,lhs,rhs,ratio`.
pub fn profile_csv(rows: &[ProfileBound]) -> String {
    let mut s = String::from("# delta,lhs,rhs,ratio\n");
    for r in rows {
        s.push_str(&format!("{:e},{:e},{:e},{:e}\n", r.delta, r.lhs, r.rhs, r.ratio));
    }
    s
}
