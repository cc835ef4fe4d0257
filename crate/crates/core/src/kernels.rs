//! Heat, Green, jumping, killing and Poisson kernels of φ(−Δ|_D).
//!
//! Every kernel has a spectral route (the truncated eigen-sum) and, where a
//! time representation exists, a subordination route: the time integral is
//! split at a crossover t₀; below it the killed heat kernel is replaced by
//! its Gaussian/image small-time form, above it by the spectral sum, whose
//! per-mode time integrals are computed once.

use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bernstein::{BernsteinSpec, ConjugatePair, PhiKind};
use crate::density::{TimeDensity, Which};
use crate::error::{PhidError, Result};
use crate::geometry::{dist, norm, BoundaryPoint, Point, Shape};
use crate::quad::{gauss_legendre, tanh_sinh_rule};
use crate::special::erfc;
use crate::spectrum::Spectrum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Spectral,
    Subordination,
}

/// How P_φσ is computed: boundary quadrature of P_φ(x,·), or through the
/// exit-time density −∂ₜ∫p_D(t,x,y)dy which integrates the same kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRoute {
    Boundary,
    Survival,
}

/// Which potential density a Green-type kernel integrates against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Potential {
    /// 𝔲, kernel G_φ
    Phi,
    /// 𝔳, kernel G_φ*
    Conj,
    /// 1, kernel G_D
    Classic,
}

pub struct KernelSet {
    pub spectrum: Arc<Spectrum>,
    pub pair: ConjugatePair,
    pub t0: f64,
    /// φ(λ_j), φ*(λ_j)
    pub phi_l: Vec<f64>,
    pub phic_l: Vec<f64>,
    /// c_j = ∫φ_j
    pub mass: Vec<f64>,
    dens: [TimeDensity; 3],
    mu: Option<TimeDensity>,
    /// ∫_{t₀}^∞ e^{−λ_j t}ρ(t)dt per potential density
    tails: [Vec<f64>; 3],
    mu_tails: Vec<f64>,
    mu_bar_t0: f64,
    sigma: OnceLock<Vec<f64>>,
}

fn idx(p: Potential) -> usize {
    match p {
        Potential::Phi => 0,
        Potential::Conj => 1,
        Potential::Classic => 2,
    }
}

/// t where C² Σ_{j>N} λ_j^{d/2} e^{−λ_j t} = tol, with λ_j continued by
/// Weyl's law from λ_N and C the sup-norm constant of the spectrum.
pub fn crossover_time(spec: &Spectrum, tol: f64) -> f64 {
    let n = spec.len();
    let d = spec.geom.dim as f64;
    let ln = spec.lambdas[n - 1];
    let c2 = spec.sup_norm_constant().powi(2).max(1e-300);
    let tail = |t: f64| {
        let mut s = 0.0;
        for j in (n + 1)..(n + 2_000_000) {
            let l = ln * (j as f64 / n as f64).powf(2.0 / d);
            let term = l.powf(d / 2.0) * (-l * t).exp();
            s += term;
            if term < 1e-18 * s {
                break;
            }
        }
        c2 * s
    };
    let (mut lo, mut hi) = (1e-9f64, 50.0f64);
    if tail(hi) > tol {
        return hi;
    }
    for _ in 0..100 {
        let m = (lo * hi).sqrt();
        if tail(m) > tol {
            lo = m;
        } else {
            hi = m;
        }
        if hi / lo < 1.0 + 1e-6 {
            break;
        }
    }
    hi
}

impl KernelSet {
    pub fn new(spectrum: Arc<Spectrum>, spec: &BernsteinSpec) -> Result<Self> {
        spec.validate()?;
        let pair = crate::bernstein::conjugate(spec);
        let t0 = crossover_time(&spectrum, 1e-8);
        let dens = [
            TimeDensity::build(&pair.spec, Which::Potential)?,
            if pair.spec.kind == PhiKind::Classical && !pair.spec.conjugated {
                // φ* ≡ 1: the potential measure is a point mass at t = 0
                TimeDensity::Powers(vec![])
            } else {
                TimeDensity::build(&pair.conj, Which::Potential)?
            },
            TimeDensity::Powers(vec![(1.0, 1.0)]),
        ];
        let mu = TimeDensity::build(&pair.spec, Which::Levy).ok();
        let lams = &spectrum.lambdas;
        let mut tails: [Vec<f64>; 3] = Default::default();
        for (k, d) in dens.iter().enumerate() {
            tails[k] = lams.iter().map(|&l| d.laplace_tail(l, t0)).collect::<Result<_>>()?;
        }
        let (mu_tails, mu_bar_t0) = match &mu {
            Some(m) => (lams.iter().map(|&l| m.laplace_tail(l, t0)).collect::<Result<_>>()?, m.tail(t0)?),
            None => (vec![0.0; lams.len()], 0.0),
        };
        let w = &spectrum.geom.weights;
        let mass = spectrum.node_values.iter().map(|v| v.iter().zip(w).map(|(a, b)| a * b).sum()).collect();
        Ok(Self {
            phi_l: lams.iter().map(|&l| pair.spec.value(l)).collect(),
            phic_l: lams.iter().map(|&l| pair.conj.value(l)).collect(),
            spectrum,
            pair,
            t0,
            mass,
            dens,
            mu,
            tails,
            mu_tails,
            mu_bar_t0,
            sigma: OnceLock::new(),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.spectrum.len()
    }

    pub fn dim(&self) -> usize {
        self.spectrum.geom.dim
    }

    pub fn modes_at(&self, x: Point) -> Vec<f64> {
        self.spectrum.eval_all(x)
    }

    fn spectral_divisor(&self, p: Potential, j: usize) -> f64 {
        match p {
            Potential::Phi => self.phi_l[j],
            Potential::Conj => self.phic_l[j],
            Potential::Classic => self.spectrum.lambdas[j],
        }
    }

    /// Small-time image expansion: p_D(t,x,y) ≈ Σ c (4πt)^{−d/2} e^{−q/t}.
    fn images(&self, x: Point, y: Point) -> Vec<(f64, f64)> {
        let g = &self.spectrum.geom;
        let d2 = |a: Point, b: Point| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)) / 4.0;
        match &g.shape {
            Shape::Interval { length } => images_1d(x[0], y[0], *length),
            Shape::Rectangle { a, b } => {
                let ix = images_1d(x[0], y[0], *a);
                let iy = images_1d(x[1], y[1], *b);
                let mut out = Vec::with_capacity(ix.len() * iy.len());
                for &(cx, qx) in &ix {
                    for &(cy, qy) in &iy {
                        out.push((cx * cy, qx + qy));
                    }
                }
                out
            }
            Shape::Disk => {
                let m = [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])];
                let r = norm(m);
                let z = if r > 1e-12 { [m[0] / r, m[1] / r] } else { [1.0, 0.0] };
                let ys = reflect(y, z, [-z[0], -z[1]]);
                let a = (norm(x).max(0.5) * norm(y).max(0.5)).powf(-0.25);
                vec![(1.0, d2(x, y)), (-a, d2(x, ys))]
            }
            Shape::GridMask { .. } => {
                let m = [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])];
                let bp = g.nearest_boundary(m);
                let ys = reflect(y, bp.z, bp.normal);
                vec![(1.0, d2(x, y)), (-1.0, d2(x, ys))]
            }
        }
    }

    /// p_D(t,x,y): spectral at t ≥ t₀, image form below.
    pub fn heat_kernel(&self, t: f64, x: Point, y: Point) -> Result<f64> {
        if !(t > 0.0) {
            return Err(PhidError::Domain(format!("heat kernel needs t > 0, got {t}")));
        }
        if t >= self.t0 {
            return Ok(self.heat_spectral(t, x, y));
        }
        let dh = self.dim() as f64 / 2.0;
        let v: f64 = self.images(x, y).iter().map(|&(c, q)| c * (4.0 * PI * t).powf(-dh) * (-q / t).exp()).sum();
        Ok(v.max(0.0))
    }

    pub fn heat_spectral(&self, t: f64, x: Point, y: Point) -> f64 {
        let fx = self.modes_at(x);
        let fy = self.modes_at(y);
        self.spectrum.lambdas.iter().zip(fx.iter().zip(&fy)).map(|(l, (a, b))| (-l * t).exp() * a * b).sum()
    }

    /// Free Gaussian kernel (4πt)^{−d/2}e^{−|x−y|²/4t}.
    pub fn free_heat(&self, t: f64, x: Point, y: Point) -> f64 {
        let dh = self.dim() as f64 / 2.0;
        (4.0 * PI * t).powf(-dh) * (-dist(x, y).powi(2) / (4.0 * t)).exp()
    }

    /// Green-type kernel ∫₀^∞ p_D(t,x,y)ρ(t)dt from precomputed mode values.
    pub fn green_modes(&self, p: Potential, fx: &[f64], fy: &[f64], x: Point, y: Point, route: Route) -> f64 {
        if dist(x, y) == 0.0 {
            return f64::INFINITY;
        }
        match route {
            Route::Spectral => {
                (0..fx.len()).map(|j| fx[j] * fy[j] / self.spectral_divisor(p, j)).sum()
            }
            Route::Subordination => {
                let k = idx(p);
                let dh = self.dim() as f64 / 2.0;
                let small: f64 = self
                    .images(x, y)
                    .iter()
                    .map(|&(c, q)| c * (4.0 * PI).powf(-dh) * self.dens[k].heat_integral(q, dh, self.t0))
                    .sum();
                let w = &self.tails[k];
                small + (0..fx.len()).map(|j| fx[j] * fy[j] * w[j]).sum::<f64>()
            }
        }
    }

    pub fn green(&self, p: Potential, x: Point, y: Point, route: Route) -> Result<f64> {
        if dist(x, y) == 0.0 {
            return Err(PhidError::Domain("Green kernel is infinite on the diagonal".into()));
        }
        let (fx, fy) = (self.modes_at(x), self.modes_at(y));
        Ok(self.green_modes(p, &fx, &fy, x, y, route))
    }

    pub fn green_phi(&self, x: Point, y: Point, route: Route) -> Result<f64> {
        self.green(Potential::Phi, x, y, route)
    }

    pub fn green_conj(&self, x: Point, y: Point, route: Route) -> Result<f64> {
        self.green(Potential::Conj, x, y, route)
    }

    pub fn green_classic(&self, x: Point, y: Point, route: Route) -> Result<f64> {
        self.green(Potential::Classic, x, y, route)
    }

    fn mu(&self) -> Result<&TimeDensity> {
        self.mu.as_ref().ok_or_else(|| PhidError::Unsupported("this φ has no Lévy density".into()))
    }

    /// J_D(x,y) = ∫ p_D(t,x,y)μ(t)dt.
    pub fn jump_modes(&self, fx: &[f64], fy: &[f64], x: Point, y: Point) -> Result<f64> {
        let mu = self.mu()?;
        if dist(x, y) == 0.0 {
            return Ok(f64::INFINITY);
        }
        let dh = self.dim() as f64 / 2.0;
        let small: f64 =
            self.images(x, y).iter().map(|&(c, q)| c * (4.0 * PI).powf(-dh) * mu.heat_integral(q, dh, self.t0)).sum();
        Ok(small + (0..fx.len()).map(|j| fx[j] * fy[j] * self.mu_tails[j]).sum::<f64>())
    }

    pub fn jump_kernel(&self, x: Point, y: Point) -> Result<f64> {
        if dist(x, y) == 0.0 {
            return Err(PhidError::Domain("jumping kernel is infinite on the diagonal".into()));
        }
        self.jump_modes(&self.modes_at(x), &self.modes_at(y), x, y)
    }

    /// Small-time 1 − ∫p_D(t,x,y)dy.
    fn exit_prob_small(&self, x: Point, t: f64) -> f64 {
        let g = &self.spectrum.geom;
        let e = |d: f64| erfc(d / (2.0 * t.sqrt()));
        match &g.shape {
            Shape::Interval { length } => e(x[0]) + e(length - x[0]),
            Shape::Rectangle { a, b } => {
                let ex = e(x[0]) + e(a - x[0]);
                let ey = e(x[1]) + e(b - x[1]);
                ex + ey - ex * ey
            }
            Shape::Disk => {
                let r = norm(x);
                r.max(0.5).powf(-0.5) * e(1.0 - r)
            }
            Shape::GridMask { .. } => e(g.delta_at(x)),
        }
    }

    /// κ(x) = ∫(1 − ∫p_D(t,x,y)dy)μ(t)dt.
    pub fn killing_modes(&self, fx: &[f64], x: Point) -> Result<f64> {
        let mu = self.mu()?;
        let delta = self.spectrum.geom.delta_at(x);
        if delta <= 0.0 {
            return Err(PhidError::Domain("killing function needs an interior point".into()));
        }
        let t_lo = (delta * delta / (4.0 * 700.0)).min(self.t0 * 1e-3);
        let small = mu.weighted(|t| self.exit_prob_small(x, t), t_lo, self.t0)?;
        let large: f64 = (0..fx.len()).map(|j| fx[j] * self.mass[j] * self.mu_tails[j]).sum();
        Ok(small + self.mu_bar_t0 - large)
    }

    pub fn killing_function(&self, x: Point) -> Result<f64> {
        self.killing_modes(&self.modes_at(x), x)
    }

    /// Small-time model of the inward normal derivative of p_D at z:
    /// (δ(x)/t)·p(t,x,z), integrated against the density.
    fn poisson_small(&self, dens: &TimeDensity, x: Point, z: Point) -> f64 {
        let dh = self.dim() as f64 / 2.0;
        let delta = self.spectrum.geom.delta_at(x);
        let q = dist(x, z).powi(2) / 4.0;
        delta * (4.0 * PI).powf(-dh) * dens.heat_integral(q, dh + 1.0, self.t0)
    }

    /// Poisson-type kernel −∂_n of the Green kernel at z (inward slope sign).
    pub fn poisson_modes(&self, p: Potential, fx: &[f64], slopes: &[f64], x: Point, z: Point, route: Route) -> f64 {
        match route {
            Route::Spectral => (0..fx.len()).map(|j| fx[j] * slopes[j] / self.spectral_divisor(p, j)).sum(),
            Route::Subordination => {
                let k = idx(p);
                let w = &self.tails[k];
                self.poisson_small(&self.dens[k], x, z) + (0..fx.len()).map(|j| fx[j] * slopes[j] * w[j]).sum::<f64>()
            }
        }
    }

    pub fn poisson(&self, p: Potential, x: Point, z: &BoundaryPoint, route: Route) -> Result<f64> {
        let slopes = self.spectrum.slopes_at(z)?;
        Ok(self.poisson_modes(p, &self.modes_at(x), &slopes, x, z.z, route))
    }

    pub fn poisson_phi(&self, x: Point, z: &BoundaryPoint, route: Route) -> Result<f64> {
        self.poisson(Potential::Phi, x, z, route)
    }

    pub fn poisson_classic(&self, x: Point, z: &BoundaryPoint, route: Route) -> Result<f64> {
        self.poisson(Potential::Classic, x, z, route)
    }

    /// m_j = ∫∂_nφ_j ζ dσ from values of ζ at the boundary nodes.
    pub fn boundary_moments(&self, zeta: &[f64]) -> Vec<f64> {
        let s = &self.spectrum;
        s.boundary_slopes
            .iter()
            .map(|sl| sl.iter().zip(zeta).zip(&s.geom.boundary).map(|((a, z), b)| a * z * b.weight).sum())
            .collect()
    }

    /// P_φζ(x) for a boundary density: large-time part from the moments,
    /// small-time part on the boundary rule refined toward x.
    pub fn poisson_integral_modes(&self, fx: &[f64], x: Point, moments: &[f64], zeta: &dyn Fn(&BoundaryPoint) -> f64) -> f64 {
        let w = &self.tails[0];
        let large: f64 = (0..fx.len()).map(|j| fx[j] * w[j] * moments[j]).sum();
        let rule = self.spectrum.geom.boundary_rule_near(x, self.spectrum.geom.boundary.len());
        let small: f64 = rule.iter().map(|b| b.weight * zeta(b) * self.poisson_small(&self.dens[0], x, b.z)).sum();
        small + large
    }

    /// Small-time part of P_φσ through the exit-time density.
    fn sigma_small_survival(&self, x: Point) -> Result<f64> {
        let g = &self.spectrum.geom;
        let u = &self.dens[0];
        let flux = |d: f64| d / (2.0 * PI.sqrt()) * u.heat_integral(d * d / 4.0, 1.5, self.t0);
        Ok(match &g.shape {
            Shape::Interval { length } => flux(x[0]) + flux(length - x[0]),
            Shape::Disk => {
                let r = norm(x);
                r.max(0.5).powf(-0.5) * flux(1.0 - r)
            }
            Shape::GridMask { .. } => flux(g.delta_at(x)),
            Shape::Rectangle { a, b } => {
                let (a, b) = (*a, *b);
                let f1 = |d: f64, t: f64| d / (2.0 * PI.sqrt()) * t.powf(-1.5) * (-d * d / (4.0 * t)).exp();
                let e = |d: f64, t: f64| erfc(d / (2.0 * t.sqrt()));
                let delta = g.delta_at(x);
                let t_lo = (delta * delta / 2800.0).min(self.t0 * 1e-3);
                u.weighted(
                    |t| {
                        let fx = f1(x[0], t) + f1(a - x[0], t);
                        let fy = f1(x[1], t) + f1(b - x[1], t);
                        let ex = e(x[0], t) + e(a - x[0], t);
                        let ey = e(x[1], t) + e(b - x[1], t);
                        fx * (1.0 - ey) + fy * (1.0 - ex)
                    },
                    t_lo,
                    self.t0,
                )?
            }
        })
    }

    /// Σ_j φ_j(x) λ_j c_j W_j: the large-time part shared by both σ routes,
    /// since ∫∂_nφ_j dσ = λ_j∫φ_j.
    fn sigma_large(&self, fx: &[f64]) -> f64 {
        let w = &self.tails[0];
        (0..fx.len()).map(|j| fx[j] * self.spectrum.lambdas[j] * self.mass[j] * w[j]).sum()
    }

    /// P_φσ(x) = ∫_{∂D} P_φ(x,z)σ(dz).
    pub fn poisson_sigma(&self, x: Point, route: SigmaRoute) -> Result<f64> {
        let fx = self.modes_at(x);
        self.poisson_sigma_modes(&fx, x, route)
    }

    pub fn poisson_sigma_modes(&self, fx: &[f64], x: Point, route: SigmaRoute) -> Result<f64> {
        let large = self.sigma_large(fx);
        let small = match route {
            SigmaRoute::Survival => self.sigma_small_survival(x)?,
            SigmaRoute::Boundary => {
                let rule = self.spectrum.geom.boundary_rule_near(x, self.spectrum.geom.boundary.len());
                rule.iter().map(|b| b.weight * self.poisson_small(&self.dens[0], x, b.z)).sum()
            }
        };
        Ok(small + large)
    }

    /// P_φσ on the interior nodes (survival route), computed once.
    pub fn sigma_field(&self) -> &[f64] {
        self.sigma.get_or_init(|| {
            let s = &self.spectrum;
            (0..s.geom.n_nodes())
                .into_par_iter()
                .map(|i| {
                    let fx: Vec<f64> = s.node_values.iter().map(|v| v[i]).collect();
                    self.poisson_sigma_modes(&fx, s.geom.nodes[i], SigmaRoute::Survival).unwrap_or(f64::NAN)
                })
                .collect()
        })
    }

    /// Per-mode defect max_j |1/(φ(λ_j)φ*(λ_j)) − 1/λ_j|·λ_j.
    pub fn factorization_mode_defect(&self) -> f64 {
        self.spectrum
            .lambdas
            .iter()
            .enumerate()
            .map(|(j, &l)| (l / (self.phi_l[j] * self.phic_l[j]) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// ∫_D F(ξ)dξ for F singular at the given centres: a partition of unity
    /// χ_c ∝ Π_{c'≠c}|ξ − c'|⁴ splits F and each piece is integrated in
    /// polar coordinates about its own centre (tanh-sinh in the radius,
    /// midpoint in the angle).  Boundary centres integrate over the inward
    /// half-plane of directions.
    pub fn singular_integral<F>(&self, centres: &[Point], f: F, n_angular: usize, h: f64) -> f64
    where
        F: Fn(Point) -> f64 + Sync,
    {
        let g = &self.spectrum.geom;
        let chi = |c: usize, p: Point| -> f64 {
            if centres.len() == 1 {
                return 1.0;
            }
            let w: Vec<f64> = (0..centres.len())
                .map(|k| {
                    centres.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, q)| dist(p, *q).powi(4)).product()
                })
                .collect();
            let s: f64 = w.iter().sum();
            if s > 0.0 {
                w[c] / s
            } else {
                0.0
            }
        };
        let radial = tanh_sinh_rule(0.0, 1.0, h);
        let mut total = 0.0;
        if g.dim == 1 {
            for (c, &x) in centres.iter().enumerate() {
                for e in [[1.0, 0.0], [-1.0, 0.0]] {
                    let rmax = g.ray_exit(x, e);
                    if !(rmax > 0.0) {
                        continue;
                    }
                    total += radial
                        .iter()
                        .map(|&(u, w, _)| {
                            let p = [x[0] + u * rmax * e[0], 0.0];
                            let v = chi(c, p) * f(p);
                            if u > 0.0 && g.delta_at(p) > 0.0 && v.is_finite() {
                                w * rmax * v
                            } else {
                                0.0
                            }
                        })
                        .sum::<f64>();
                }
            }
            return total;
        }
        for (c, &x) in centres.iter().enumerate() {
            let on_boundary = g.delta_at(x) <= 1e-14;
            let (th0, span) = if on_boundary {
                let nb = g.nearest_boundary(x);
                (nb.normal[1].atan2(nb.normal[0]) - 0.5 * PI, PI)
            } else {
                (0.0, 2.0 * PI)
            };
            let dth = span / n_angular as f64;
            total += (0..n_angular)
                .into_par_iter()
                .map(|k| {
                    let th = th0 + (k as f64 + 0.5) * dth;
                    let e = [th.cos(), th.sin()];
                    let rmax = g.ray_exit(x, e);
                    if !(rmax > 0.0) {
                        return 0.0;
                    }
                    radial
                        .iter()
                        .map(|&(u, w, _)| {
                            let r = u * rmax;
                            let p = [x[0] + r * e[0], x[1] + r * e[1]];
                            if r <= 0.0 || g.delta_at(p) <= 0.0 {
                                return 0.0;
                            }
                            let v = chi(c, p) * f(p);
                            if v.is_finite() {
                                w * rmax * r * v
                            } else {
                                0.0
                            }
                        })
                        .sum::<f64>()
                        * dth
                })
                .sum::<f64>();
        }
        total
    }

    /// Kernel-level check of ∫G_φ(x,ξ)G_φ*(ξ,y)dξ = G_D(x,y).
    pub fn verify_factorization(&self, pairs: &[(Point, Point)]) -> Result<FactorizationReport> {
        let mut rows = Vec::new();
        for &(x, y) in pairs {
            let (fx, fy) = (self.modes_at(x), self.modes_at(y));
            let integrand = |p: Point| {
                let fp = self.modes_at(p);
                self.green_modes(Potential::Phi, &fx, &fp, x, p, Route::Subordination)
                    * self.green_modes(Potential::Conj, &fp, &fy, p, y, Route::Subordination)
            };
            let quad = self.singular_integral(&[x, y], integrand, 96, 1.0 / 16.0);
            let reference = self.green_modes(Potential::Classic, &fx, &fy, x, y, Route::Subordination);
            rows.push(PairDefect { x, y, quadrature: quad, reference, relative: (quad - reference).abs() / reference });
        }
        let max_relative = rows.iter().map(|r| r.relative).fold(0.0, f64::max);
        Ok(FactorizationReport { mode_defect: self.factorization_mode_defect(), rows, max_relative })
    }

    /// ∫G_φ*(x,ξ)P_φ(ξ,z)dξ against P_D(x,z).
    pub fn verify_green_poisson_identity(&self, x: Point, z: &BoundaryPoint) -> Result<PairDefect> {
        let slopes = self.spectrum.slopes_at(z)?;
        let fx = self.modes_at(x);
        let integrand = |p: Point| {
            let fp = self.modes_at(p);
            self.green_modes(Potential::Conj, &fx, &fp, x, p, Route::Subordination)
                * self.poisson_modes(Potential::Phi, &fp, &slopes, p, z.z, Route::Subordination)
        };
        let quad = self.singular_integral(&[x, z.z], integrand, 96, 1.0 / 16.0);
        let reference = self.poisson_modes(Potential::Classic, &fx, &slopes, x, z.z, Route::Subordination);
        Ok(PairDefect { x, y: z.z, quadrature: quad, reference, relative: (quad - reference).abs() / reference })
    }

    /// Per-mode Green–Poisson identity: (1/φ*)(1/φ) against 1/λ.
    pub fn green_poisson_mode_defect(&self) -> f64 {
        self.factorization_mode_defect()
    }

    /// Spectral route of φ(−Δ|_D) on node values.
    pub fn apply_spectral(&self, u: &[f64]) -> Vec<f64> {
        let c = self.spectrum.coefficients(u);
        let scaled: Vec<f64> = c.coef.iter().zip(&self.phi_l).map(|(a, p)| a * p).collect();
        self.spectrum.synthesize(&scaled)
    }

    /// Spectral route at an arbitrary point from given coefficients.
    pub fn apply_spectral_at(&self, coef: &[f64], x: Point) -> f64 {
        let fx = self.modes_at(x);
        (0..coef.len()).map(|j| coef[j] * self.phi_l[j] * fx[j]).sum()
    }

    fn local_index(&self, eps: f64) -> f64 {
        match self.pair.spec.stable_index() {
            Some(s) => s,
            None => {
                let l = eps.powi(-2);
                self.pair.spec.derivative(l) * l / self.pair.spec.value(l)
            }
        }
    }

    /// P.V.∫_{|y−x|>ε}(u(x) − u(y))J_D(x,y)dy + κ(x)u(x) at one ε.
    fn pointwise_eps(&self, u: &(dyn Fn(Point) -> f64 + Sync), x: Point, eps: f64, kappa: f64, fx: &[f64]) -> Result<f64> {
        let g = &self.spectrum.geom;
        let ux = u(x);
        let n_ang = 64;
        let (gv, gw) = gauss_legendre(24);
        let dth = 2.0 * PI / n_ang as f64;
        let parts: Vec<Result<f64>> = (0..n_ang)
            .into_par_iter()
            .map(|k| {
                let th = (k as f64 + 0.5) * dth;
                let e = [th.cos(), th.sin()];
                let rmax = g.ray_exit(x, e);
                if rmax <= eps {
                    return Ok(0.0);
                }
                // ρ = ε (R/ε)^v on two panels in v
                let lr = (rmax / eps).ln();
                let mut s = 0.0;
                for (a, b) in [(0.0, 0.5), (0.5, 1.0)] {
                    for (v, w) in gv.iter().zip(&gw) {
                        let vv = a + (b - a) * 0.5 * (v + 1.0);
                        let r = eps * (lr * vv).exp();
                        let y = [x[0] + r * e[0], x[1] + r * e[1]];
                        if g.delta_at(y) <= 0.0 {
                            continue;
                        }
                        let j = self.jump_modes(fx, &self.modes_at(y), x, y)?;
                        s += w * 0.5 * (b - a) * lr * r * r * (ux - u(y)) * j;
                    }
                }
                Ok(s * dth)
            })
            .collect();
        let mut total = kappa * ux;
        for p in parts {
            total += p?;
        }
        Ok(total)
    }

    /// Pointwise route of φ(−Δ|_D)u at x: symmetric exclusion of B(x,ε) and
    /// Richardson extrapolation over ε, ε/2 with exponent 2 − 2s.
    pub fn apply_pointwise(&self, u: &(dyn Fn(Point) -> f64 + Sync), x: Point, eps: f64) -> Result<f64> {
        let delta = self.spectrum.geom.delta_at(x);
        if delta < 4.0 * eps {
            return Err(PhidError::Precondition {
                msg: format!("pointwise operator needs δ(x) ≥ 4ε, got δ = {delta:e}, ε = {eps:e}"),
                nodes: vec![],
            });
        }
        let fx = self.modes_at(x);
        let kappa = self.killing_modes(&fx, x)?;
        let a = self.pointwise_eps(u, x, eps, kappa, &fx)?;
        let b = self.pointwise_eps(u, x, 0.5 * eps, kappa, &fx)?;
        let p = 2.0 - 2.0 * self.local_index(eps);
        let f = 2f64.powf(p);
        Ok((f * b - a) / (f - 1.0))
    }

    /// Comparison expressions of the sharp two-sided estimates.
    pub fn green_comparison(&self, x: Point, y: Point) -> f64 {
        let g = &self.spectrum.geom;
        let r = dist(x, y);
        let d = self.dim() as i32;
        ((g.delta_at(x) * g.delta_at(y) / (r * r)).min(1.0)) / (r.powi(d) * self.pair.spec.value(r.powi(-2)))
    }

    pub fn poisson_comparison(&self, x: Point, z: Point) -> f64 {
        let g = &self.spectrum.geom;
        let r = dist(x, z);
        let d = self.dim() as i32;
        g.delta_at(x) / (r.powi(d + 2) * self.pair.spec.value(r.powi(-2)))
    }

    pub fn jump_comparison(&self, x: Point, y: Point) -> f64 {
        let g = &self.spectrum.geom;
        let r = dist(x, y);
        let d = self.dim() as i32;
        ((g.delta_at(x) * g.delta_at(y) / (r * r)).min(1.0)) * self.pair.spec.value(r.powi(-2)) / r.powi(d)
    }

    /// Kernel ÷ comparison over a stratified sample, per kernel.
    pub fn verify_sharp_bounds(&self, sample: &KernelSample, ceilings: [f64; 3]) -> Result<Vec<RatioReport>> {
        let gr: Vec<f64> = sample
            .pairs
            .par_iter()
            .map(|&(x, y)| self.green_phi(x, y, Route::Subordination).map(|v| v / self.green_comparison(x, y)))
            .collect::<Result<_>>()?;
        let pr: Vec<f64> = sample
            .boundary
            .par_iter()
            .map(|(x, z)| self.poisson_phi(*x, z, Route::Subordination).map(|v| v / self.poisson_comparison(*x, z.z)))
            .collect::<Result<_>>()?;
        let jr: Vec<f64> = sample
            .pairs
            .par_iter()
            .map(|&(x, y)| self.jump_kernel(x, y).map(|v| v / self.jump_comparison(x, y)))
            .collect::<Result<_>>()?;
        Ok(vec![
            RatioReport::new("green_phi", &gr, sample.excluded_fraction, ceilings[0]),
            RatioReport::new("poisson_phi", &pr, sample.excluded_fraction, ceilings[1]),
            RatioReport::new("jump", &jr, sample.excluded_fraction, ceilings[2]),
        ])
    }

    /// One row per pair for CSV dumps.
    pub fn kernel_rows(&self, kernel: &str, pairs: &[(Point, Point)], route: Route) -> Result<Vec<KernelRow>> {
        pairs
            .iter()
            .map(|&(x, y)| {
                let value = match kernel {
                    "green_phi" => self.green_phi(x, y, route)?,
                    "green_conj" => self.green_conj(x, y, route)?,
                    "green_classic" => self.green_classic(x, y, route)?,
                    "jump" => self.jump_kernel(x, y)?,
                    other => return Err(PhidError::Invalid(format!("unknown kernel {other}"))),
                };
                Ok(KernelRow { x, y, value, route })
            })
            .collect()
    }
}

fn images_1d(x: f64, y: f64, l: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(6);
    for k in -1..=1 {
        let s = 2.0 * k as f64 * l;
        out.push((1.0, (x - y + s).powi(2) / 4.0));
        out.push((-1.0, (x + y + s).powi(2) / 4.0));
    }
    out
}

/// Reflection of y across the line through z with unit normal n.
fn reflect(y: Point, z: Point, n: Point) -> Point {
    let s = (y[0] - z[0]) * n[0] + (y[1] - z[1]) * n[1];
    [y[0] - 2.0 * s * n[0], y[1] - 2.0 * s * n[1]]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairDefect {
    pub x: Point,
    pub y: Point,
    pub quadrature: f64,
    pub reference: f64,
    pub relative: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub mode_defect: f64,
    pub rows: Vec<PairDefect>,
    pub max_relative: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioReport {
    pub kernel: String,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub n_samples: usize,
    pub excluded_fraction: f64,
    pub ceiling: f64,
    pub pass: bool,
}

impl RatioReport {
    pub fn new(kernel: &str, ratios: &[f64], excluded_fraction: f64, ceiling: f64) -> Self {
        let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_ratio = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let pass = min_ratio > 0.0 && max_ratio / min_ratio <= ceiling;
        Self { kernel: kernel.into(), min_ratio, max_ratio, n_samples: ratios.len(), excluded_fraction, ceiling, pass }
    }

    pub fn band(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelRow {
    pub x: Point,
    pub y: Point,
    pub value: f64,
    pub route: Route,
}

/// CSV with columns x1,x2,y1,y2,value,route.
pub fn kernel_csv(rows: &[KernelRow]) -> String {
    let mut s = String::from("x1,x2,y1,y2,value,route\n");
    for r in rows {
        let route = match r.route {
            Route::Spectral => "spectral",
            Route::Subordination => "subordination",
        };
        s.push_str(&format!("{},{},{},{},{:.17e},{}\n", r.x[0], r.x[1], r.y[0], r.y[1], r.value, route));
    }
    s
}

/// Interior pairs in three strata (bulk, near-diagonal, near-boundary) and
/// interior/boundary pairs for the Poisson kernel; points with δ below
/// `floor` are rejected and counted.
#[derive(Clone, Debug)]
pub struct KernelSample {
    pub pairs: Vec<(Point, Point)>,
    pub boundary: Vec<(Point, BoundaryPoint)>,
    pub excluded_fraction: f64,
}

pub fn stratified_sample(ks: &KernelSet, per_stratum: usize, floor: f64, seed: u64) -> KernelSample {
    let g = &ks.spectrum.geom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = bbox(&g.shape);
    let mut tried = 0usize;
    let mut rejected = 0usize;
    let uniform = |rng: &mut ChaCha8Rng, tried: &mut usize, rejected: &mut usize| -> Point {
        loop {
            let p = [rng.gen_range(lo[0]..hi[0]), if g.dim == 1 { 0.0 } else { rng.gen_range(lo[1]..hi[1]) }];
            if !g.contains(p) {
                continue;
            }
            *tried += 1;
            if g.delta_at(p) < floor {
                *rejected += 1;
                continue;
            }
            return p;
        }
    };
    let mut pairs = Vec::new();
    let bulk_floor = 0.2 * g.inradius;
    while pairs.len() < per_stratum {
        let x = uniform(&mut rng, &mut tried, &mut rejected);
        let y = uniform(&mut rng, &mut tried, &mut rejected);
        if g.delta_at(x) >= bulk_floor && g.delta_at(y) >= bulk_floor && dist(x, y) >= floor {
            pairs.push((x, y));
        }
    }
    let mut k = 0;
    while k < per_stratum {
        let x = uniform(&mut rng, &mut tried, &mut rejected);
        let r = floor * (0.1 * g.diam / floor).powf(rng.gen::<f64>());
        let th: f64 = rng.gen_range(0.0..2.0 * PI);
        let y = if g.dim == 1 { [x[0] + r * th.cos().signum(), 0.0] } else { [x[0] + r * th.cos(), x[1] + r * th.sin()] };
        tried += 1;
        if !g.contains(y) || g.delta_at(y) < floor {
            rejected += 1;
            continue;
        }
        pairs.push((x, y));
        k += 1;
    }
    let near = |rng: &mut ChaCha8Rng| -> (Point, BoundaryPoint) {
        let b = g.boundary[rng.gen_range(0..g.boundary.len())];
        let d = floor * (0.3 * g.inradius / floor).powf(rng.gen::<f64>());
        ([b.z[0] + d * b.normal[0], b.z[1] + d * b.normal[1]], b)
    };
    let mut k = 0;
    while k < per_stratum {
        let (x, _) = near(&mut rng);
        let y = uniform(&mut rng, &mut tried, &mut rejected);
        tried += 1;
        if !g.contains(x) || g.delta_at(x) < floor || dist(x, y) < floor {
            rejected += 1;
            continue;
        }
        pairs.push((x, y));
        k += 1;
    }
    let mut boundary = Vec::new();
    while boundary.len() < 2 * per_stratum {
        let x = if boundary.len() % 2 == 0 {
            uniform(&mut rng, &mut tried, &mut rejected)
        } else {
            let (x, _) = near(&mut rng);
            tried += 1;
            if !g.contains(x) || g.delta_at(x) < floor {
                rejected += 1;
                continue;
            }
            x
        };
        let z = g.boundary[rng.gen_range(0..g.boundary.len())];
        if dist(x, z.z) < floor {
            continue;
        }
        boundary.push((x, z));
    }
    KernelSample { pairs, boundary, excluded_fraction: rejected as f64 / tried.max(1) as f64 }
}

fn bbox(shape: &Shape) -> (Point, Point) {
    match shape {
        Shape::Interval { length } => ([0.0, 0.0], [*length, 0.0]),
        Shape::Rectangle { a, b } => ([0.0, 0.0], [*a, *b]),
        Shape::Disk => ([-1.0, -1.0], [1.0, 1.0]),
        Shape::GridMask { mask } => {
            ([mask.x0, mask.y0], [mask.x0 + mask.nx as f64 * mask.h, mask.y0 + mask.ny as f64 * mask.h])
        }
    }
}

/// ∫G(x,·)f over the node rule, for node functions f (spectral route).
pub fn green_apply_nodes(ks: &KernelSet, p: Potential, f: &[f64]) -> Vec<f64> {
    let c = ks.spectrum.coefficients(f);
    let scaled: Vec<f64> = (0..c.coef.len()).map(|j| c.coef[j] / ks.spectral_divisor(p, j)).collect();
    ks.spectrum.synthesize(&scaled)
}

/// Radial integral 2π∫₀¹ F(r) r dr on a tanh-sinh rule; F receives (r, 1 − r).
pub fn radial_integral(f: impl Fn(f64, f64) -> Result<f64>, h: f64) -> Result<f64> {
    let mut s = 0.0;
    for (r, w, d) in tanh_sinh_rule(0.0, 1.0, h) {
        let delta = if r > 0.5 { d } else { 1.0 - r };
        s += w * r * f(r, delta)?;
    }
    Ok(2.0 * PI * s)
}
