//! Monte Carlo oracle: the subordinate killed Brownian motion X_t = W^D_{S_t}
//! with a stable subordinator, simulated in operational time steps Δ.
//!
//! W has generator Δ (Gaussian steps of variance 2·inc per coordinate) and
//! is killed on leaving D.  Each subordinator increment is walked in
//! sub-steps no longer than (δ/4)² so that the overshoot across ∂D stays
//! small; a path closer than `kill_floor` to ∂D is killed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PhidError, Result};
use crate::geometry::{dist, BoundaryPoint, DomainGeometry, Point};
use crate::kernels::{KernelSet, Potential, Route};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct PathConfig {
    /// Operational time step Δ.
    pub dt: f64,
    /// Operational horizon T; paths alive at T are truncated and counted.
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    /// Stable index of the subordinator.
    pub s: f64,
    /// Distance to ∂D below which a path is killed.
    pub kill_floor: f64,
}

impl PathConfig {
    pub fn new(s: f64, paths: usize, seed: u64) -> Self {
        Self { dt: 1e-3, horizon: 50.0, paths, seed, s, kill_floor: 1e-4 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || self.paths == 0 || !(self.horizon > self.dt) || !(self.kill_floor > 0.0) {
            return Err(PhidError::Invalid("path config needs Δ > 0, T > Δ, M ≥ 1, kill floor > 0".into()));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(PhidError::Invalid(format!("stable index {} outside (0,1)", self.s)));
        }
        Ok(())
    }

    /// Stable index of a φ spec, or an error for anything but λ^s.
    pub fn for_spec(spec: &crate::bernstein::BernsteinSpec, paths: usize, seed: u64) -> Result<Self> {
        match spec.stable_index() {
            Some(s) if matches!(spec.kind, crate::bernstein::PhiKind::Stable) => Ok(Self::new(s, paths, seed)),
            _ => Err(PhidError::Unsupported("only stable subordinators are simulated".into())),
        }
    }
}

/// Independent stream for path `i`.
fn path_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(i as u64);
    r
}

/// One increment with E e^{−λ·inc} = e^{−Δλ^s} (Chambers–Mallows–Stuck).
pub fn stable_increment<R: Rng>(rng: &mut R, s: f64, dt: f64) -> f64 {
    let v: f64 = PI * rng.gen::<f64>();
    let w: f64 = Exp1.sample(rng);
    let a = (s * v).sin() / v.sin().powf(1.0 / s);
    let b = (((1.0 - s) * v).sin() / w).powf((1.0 - s) / s);
    dt.powf(1.0 / s) * a * b
}

/// `n` increments from stream `stream` of the configured seed.
pub fn sample_subordinator(cfg: &PathConfig, n: usize, stream: usize) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut rng = path_rng(cfg.seed, stream);
    Ok((0..n).map(|_| stable_increment(&mut rng, cfg.s, cfg.dt)).collect())
}

/// Advances killed Brownian motion by operational time `inc`.  Returns
/// false when the path is killed.
fn advance<R: Rng>(rng: &mut R, g: &DomainGeometry, x: &mut Point, inc: f64, floor: f64) -> bool {
    let mut left = inc;
    while left > 0.0 {
        let d = g.delta_at(*x);
        if d < floor {
            return false;
        }
        let tau = left.min((0.25 * d).powi(2));
        let sd = (2.0 * tau).sqrt();
        let n0: f64 = StandardNormal.sample(rng);
        let n1: f64 = StandardNormal.sample(rng);
        x[0] += sd * n0;
        if g.dim == 2 {
            x[1] += sd * n1;
        }
        if !g.contains(*x) {
            return false;
        }
        left -= tau;
    }
    g.delta_at(*x) >= floor
}

/// Bounded continuous integrands with an id for reports.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Integrand {
    Zero,
    Constant { c: f64 },
    /// exp(1 − 1/(1 − |x−c|²/r²)) inside B(c, r).
    Bump { center: Point, radius: f64 },
}

impl Integrand {
    pub fn eval(&self, x: Point) -> f64 {
        match *self {
            Integrand::Zero => 0.0,
            Integrand::Constant { c } => c,
            Integrand::Bump { center, radius } => {
                let q = (dist(x, center) / radius).powi(2);
                if q < 1.0 {
                    (1.0 - 1.0 / (1.0 - q)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn id(&self) -> String {
        match *self {
            Integrand::Zero => "zero".into(),
            Integrand::Constant { c } => format!("const({c})"),
            Integrand::Bump { center, radius } => format!("bump({},{};{})", center[0], center[1], radius),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub se: f64,
    pub paths: usize,
    /// Paths still alive at the horizon.
    pub truncated: usize,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::INFINITY);
    }
    let var = v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// E_x∫₀^∞ f(X_t)dt with the trapezoid rule in operational time.
pub fn estimate_green_potential(cfg: &PathConfig, ks: &KernelSet, x: Point, f: &Integrand) -> Result<Estimate> {
    cfg.validate()?;
    let g = &ks.spectrum.geom;
    if !(g.delta_at(x) > 0.0) {
        return Err(PhidError::Domain(format!("{x:?} is not interior")));
    }
    if matches!(f, Integrand::Zero) {
        return Ok(Estimate { estimate: 0.0, se: 0.0, paths: cfg.paths, truncated: 0 });
    }
    let steps = (cfg.horizon / cfg.dt).ceil() as usize;
    let runs: Vec<(f64, bool)> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.seed, i);
            let mut y = x;
            let mut acc = 0.5 * f.eval(y);
            for _ in 0..steps {
                let inc = stable_increment(&mut rng, cfg.s, cfg.dt);
                if !advance(&mut rng, g, &mut y, inc, cfg.kill_floor) {
                    return (acc * cfg.dt, false);
                }
                acc += f.eval(y);
            }
            (acc * cfg.dt, true)
        })
        .collect();
    let vals: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let truncated = runs.iter().filter(|r| r.1).count();
    let (estimate, se) = mean_se(&vals);
    Ok(Estimate { estimate, se, paths: cfg.paths, truncated })
}

/// Empirical P_x(τ_D ≤ t) at the given operational times.
pub fn killing_curve(cfg: &PathConfig, ks: &KernelSet, x: Point, times: &[f64]) -> Result<Vec<f64>> {
    cfg.validate()?;
    let g = &ks.spectrum.geom;
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let steps = (t_max / cfg.dt).ceil() as usize;
    let deaths: Vec<f64> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.seed, i);
            let mut y = x;
            for k in 0..steps {
                let inc = stable_increment(&mut rng, cfg.s, cfg.dt);
                if !advance(&mut rng, g, &mut y, inc, cfg.kill_floor) {
                    return (k + 1) as f64 * cfg.dt;
                }
            }
            f64::INFINITY
        })
        .collect();
    Ok(times
        .iter()
        .map(|&t| deaths.iter().filter(|&&d| d <= t + 1e-12).count() as f64 / cfg.paths as f64)
        .collect())
}

/// Ball U = B(center, radius) compactly inside D.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeanValueReport {
    pub x: Point,
    pub h_x: f64,
    pub estimate: f64,
    pub se: f64,
    pub defect: f64,
    /// Fraction of paths that left D before leaving the ball.
    pub killed_fraction: f64,
    pub truncated: usize,
}

/// E_x h(X_{τ_U}) against h(x); killed paths contribute 0.
pub fn verify_mean_value(
    cfg: &PathConfig,
    ks: &KernelSet,
    h: &(dyn Fn(Point) -> f64 + Sync),
    ball: Ball,
    x: Point,
) -> Result<MeanValueReport> {
    cfg.validate()?;
    let g = &ks.spectrum.geom;
    let clearance = (0..64)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / 64.0;
            g.delta_at([ball.center[0] + ball.radius * th.cos(), ball.center[1] + ball.radius * th.sin()])
        })
        .fold(f64::INFINITY, f64::min);
    if !(clearance > 0.0) || dist(x, ball.center) >= ball.radius {
        return Err(PhidError::Domain("ball must lie compactly inside D and contain x".into()));
    }
    let steps = (cfg.horizon / cfg.dt).ceil() as usize;
    let runs: Vec<(Option<Point>, bool)> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.seed, i);
            let mut y = x;
            for _ in 0..steps {
                let inc = stable_increment(&mut rng, cfg.s, cfg.dt);
                if !advance(&mut rng, g, &mut y, inc, cfg.kill_floor) {
                    return (None, false);
                }
                if dist(y, ball.center) >= ball.radius {
                    return (Some(y), false);
                }
            }
            (Some(y), true)
        })
        .collect();
    let exits: Vec<Option<Point>> = runs.iter().map(|r| r.0).collect();
    let vals: Vec<f64> = exits.par_iter().map(|e| e.map_or(0.0, h)).collect();
    let (estimate, se) = mean_se(&vals);
    let h_x = h(x);
    Ok(MeanValueReport {
        x,
        h_x,
        estimate,
        se,
        defect: (estimate - h_x).abs(),
        killed_fraction: exits.iter().filter(|e| e.is_none()).count() as f64 / cfg.paths as f64,
        truncated: runs.iter().filter(|r| r.1).count(),
    })
}

/// h = P_φ(·, z) by the subordination route.
pub fn poisson_kernel_fn<'a>(ks: &'a KernelSet, z: BoundaryPoint) -> Result<impl Fn(Point) -> f64 + Sync + 'a> {
    let slopes = ks.spectrum.slopes_at(&z)?;
    Ok(move |x: Point| ks.poisson_modes(Potential::Phi, &ks.modes_at(x), &slopes, x, z.z, Route::Subordination))
}

/// Report row {x, f-id, M, estimate, se, reference, z-score}.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OracleRow {
    pub x: Point,
    pub f_id: String,
    #[serde(rename = "M")]
    pub m: usize,
    pub estimate: f64,
    pub se: f64,
    pub reference: f64,
    pub z_score: f64,
}

impl OracleRow {
    pub fn new(x: Point, f_id: String, est: &Estimate, reference: f64) -> Self {
        let z_score = if est.se > 0.0 { (est.estimate - reference) / est.se } else { 0.0 };
        Self { x, f_id, m: est.paths, estimate: est.estimate, se: est.se, reference, z_score }
    }
}

/// Spectral reference G_φf(x) = Σ_j ⟨f, φ_j⟩/φ(λ_j) φ_j(x).
pub fn spectral_reference(ks: &KernelSet, f: &Integrand, x: Point) -> f64 {
    let s = &ks.spectrum;
    let vals: Vec<f64> = s.geom.nodes.iter().map(|&y| f.eval(y)).collect();
    let c = s.coefficients(&vals);
    let fx = ks.modes_at(x);
    (0..c.coef.len()).map(|j| c.coef[j] / ks.phi_l[j] * fx[j]).sum()
}
