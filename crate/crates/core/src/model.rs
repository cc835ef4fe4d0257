//! Discrete node models the solvers act on.
//!
//! A model owns a node set and three linear maps on node functions:
//! G_φ, φ(−Δ|_D) and the Poisson map ζ ↦ P_φζ from boundary densities.
//! `SpectralModel` uses the truncated eigen-expansion of a `KernelSet`.
//! `PolarFvModel` is a finite-volume discretisation of the unit disk whose
//! matrix functions are evaluated exactly, mode by mode, so that positivity
//! of e^{−tA} carries over to G_φ and P_φ.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;

use crate::bernstein::BernsteinSpec;
use crate::error::{PhidError, Result};
use crate::geometry::{norm, BoundaryPoint, Point};
use crate::kernels::{green_apply_nodes, KernelSet, Potential, Route};

/// Interior nodes with cell weights and δ, and boundary nodes with σ-weights.
#[derive(Clone, Debug)]
pub struct NodeSet {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub delta: Vec<f64>,
    pub boundary: Vec<BoundaryPoint>,
    /// Length scale below which δ is not resolved.
    pub spacing: f64,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫|u|δ dx.
    pub fn l1_delta(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.weights).zip(&self.delta).map(|((v, w), d)| v.abs() * w * d).sum()
    }

    /// ∫u dx.
    pub fn integrate(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// sup |u| over nodes with δ > 2·spacing.
    pub fn sup_interior(&self, u: &[f64]) -> f64 {
        let floor = 2.0 * self.spacing;
        u.iter().zip(&self.delta).filter(|(_, d)| **d > floor).map(|(v, _)| v.abs()).fold(0.0, f64::max)
    }

    pub fn boundary_values(&self, f: impl Fn(&BoundaryPoint) -> f64) -> Vec<f64> {
        self.boundary.iter().map(f).collect()
    }
}

pub trait NodeModel: Send + Sync {
    fn node_set(&self) -> &NodeSet;
    fn phi(&self) -> &BernsteinSpec;
    /// G_φf.
    fn green(&self, f: &[f64]) -> Vec<f64>;
    /// φ(−Δ|_D)u.
    fn apply(&self, u: &[f64]) -> Vec<f64>;
    /// P_φζ for a density ζ against σ at the boundary nodes.
    fn poisson(&self, zeta: &[f64]) -> Vec<f64>;
    /// P_φσ.
    fn poisson_sigma(&self) -> &[f64];
    /// Value of a node function at an arbitrary interior point.
    fn eval(&self, u: &[f64], x: Point) -> f64;
    fn label(&self) -> String;
}

/// Node model built on the eigen-expansion of a kernel set.
pub struct SpectralModel {
    pub ks: Arc<KernelSet>,
    nodes: NodeSet,
    poisson_rows: OnceLock<Vec<Vec<f64>>>,
}

impl SpectralModel {
    pub fn new(ks: Arc<KernelSet>) -> Self {
        let g = &ks.spectrum.geom;
        let nodes = NodeSet {
            nodes: g.nodes.clone(),
            weights: g.weights.clone(),
            delta: g.delta.clone(),
            boundary: g.boundary.clone(),
            spacing: g.spacing,
        };
        Self { ks, nodes, poisson_rows: OnceLock::new() }
    }

    /// P_φ(x_i, z_b)·w_b for all interior/boundary node pairs.
    fn rows(&self) -> &Vec<Vec<f64>> {
        self.poisson_rows.get_or_init(|| {
            let s = &self.ks.spectrum;
            let g = &s.geom;
            (0..g.n_nodes())
                .into_par_iter()
                .map(|i| {
                    let fx: Vec<f64> = s.node_values.iter().map(|v| v[i]).collect();
                    g.boundary
                        .iter()
                        .enumerate()
                        .map(|(b, bp)| {
                            let slopes: Vec<f64> = s.boundary_slopes.iter().map(|v| v[b]).collect();
                            bp.weight
                                * self.ks.poisson_modes(Potential::Phi, &fx, &slopes, g.nodes[i], bp.z, Route::Subordination)
                        })
                        .collect()
                })
                .collect()
        })
    }
}

impl NodeModel for SpectralModel {
    fn node_set(&self) -> &NodeSet {
        &self.nodes
    }

    fn phi(&self) -> &BernsteinSpec {
        &self.ks.pair.spec
    }

    fn green(&self, f: &[f64]) -> Vec<f64> {
        green_apply_nodes(&self.ks, Potential::Phi, f)
    }

    fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.ks.apply_spectral(u)
    }

    fn poisson(&self, zeta: &[f64]) -> Vec<f64> {
        self.rows().iter().map(|r| r.iter().zip(zeta).map(|(a, b)| a * b).sum()).collect()
    }

    fn poisson_sigma(&self) -> &[f64] {
        self.ks.sigma_field()
    }

    fn eval(&self, u: &[f64], x: Point) -> f64 {
        let c = self.ks.spectrum.coefficients(u);
        let fx = self.ks.modes_at(x);
        c.coef.iter().zip(&fx).map(|(a, b)| a * b).sum()
    }

    fn label(&self) -> String {
        format!("spectral N={}", self.ks.n_modes())
    }
}

/// Finite volumes on the unit disk: n_r rings with faces
/// ρ_i = 1 − (1 − i/n_r)^q, n_θ equal sectors, two-point fluxes and a
/// Dirichlet face at r = 1.  A = M⁻¹K with K a symmetric M-matrix, so
/// B = M^{1/2}AM^{−1/2} is symmetric and commutes with rotations; every
/// angular Fourier mode reduces B to a symmetric tridiagonal matrix in r.
pub struct PolarFvModel {
    pub n_r: usize,
    pub n_theta: usize,
    pub grading: f64,
    pub faces: Vec<f64>,
    pub centers: Vec<f64>,
    spec: BernsteinSpec,
    nodes: NodeSet,
    ring_area: Vec<f64>,
    /// Eigenvectors (columns) and eigenvalues of the radial operator per
    /// Fourier index k = 0..=n_θ/2.
    modes: Vec<(DMatrix<f64>, Vec<f64>)>,
    phi_vals: Vec<Vec<f64>>,
    /// Boundary transmissibility over the last ring's cell area.
    source: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    sigma: OnceLock<Vec<f64>>,
}

impl PolarFvModel {
    pub fn new(spec: &BernsteinSpec, n_r: usize, n_theta: usize, grading: f64) -> Result<Self> {
        spec.validate()?;
        if n_r < 4 || n_theta < 8 || !(grading >= 1.0) {
            return Err(PhidError::Invalid(format!(
                "polar mesh needs n_r ≥ 4, n_θ ≥ 8, grading ≥ 1 (got {n_r}, {n_theta}, {grading})"
            )));
        }
        let faces: Vec<f64> = (0..=n_r).map(|i| 1.0 - (1.0 - i as f64 / n_r as f64).powf(grading)).collect();
        let centers: Vec<f64> = (0..n_r).map(|i| 0.5 * (faces[i] + faces[i + 1])).collect();
        let dth = 2.0 * PI / n_theta as f64;
        let ring_area: Vec<f64> = (0..n_r).map(|i| 0.5 * dth * (faces[i + 1].powi(2) - faces[i].powi(2))).collect();
        // radial transmissibility across face i+1 (between ring i and i+1)
        let t_rad: Vec<f64> = (0..n_r)
            .map(|i| {
                if i + 1 < n_r {
                    faces[i + 1] * dth / (centers[i + 1] - centers[i])
                } else {
                    dth / (1.0 - centers[i])
                }
            })
            .collect();
        let t_ang: Vec<f64> = (0..n_r).map(|i| (faces[i + 1] - faces[i]) / (centers[i] * dth)).collect();
        let modes: Vec<(DMatrix<f64>, Vec<f64>)> = (0..=n_theta / 2)
            .into_par_iter()
            .map(|k| {
                let ang = 2.0 - 2.0 * (2.0 * PI * k as f64 / n_theta as f64).cos();
                let mut m = DMatrix::<f64>::zeros(n_r, n_r);
                for i in 0..n_r {
                    let left = if i > 0 { t_rad[i - 1] } else { 0.0 };
                    m[(i, i)] = (left + t_rad[i] + t_ang[i] * ang) / ring_area[i];
                    if i + 1 < n_r {
                        let o = -t_rad[i] / (ring_area[i] * ring_area[i + 1]).sqrt();
                        m[(i, i + 1)] = o;
                        m[(i + 1, i)] = o;
                    }
                }
                let e = SymmetricEigen::new(m);
                (e.eigenvectors, e.eigenvalues.iter().cloned().collect())
            })
            .collect();
        if modes.iter().any(|(_, l)| l.iter().any(|v| !(*v > 0.0))) {
            return Err(PhidError::Numeric {
                what: "polar finite volumes".into(),
                detail: "non-positive eigenvalue".into(),
            });
        }
        let phi_vals = modes.iter().map(|(_, l)| l.iter().map(|&v| spec.value(v)).collect()).collect();
        let mut nodes = Vec::with_capacity(n_r * n_theta);
        let mut weights = Vec::with_capacity(n_r * n_theta);
        let mut delta = Vec::with_capacity(n_r * n_theta);
        for i in 0..n_r {
            for m in 0..n_theta {
                let (s, c) = ((m as f64 + 0.5) * dth).sin_cos();
                nodes.push([centers[i] * c, centers[i] * s]);
                weights.push(ring_area[i]);
                delta.push(1.0 - centers[i]);
            }
        }
        let boundary = (0..n_theta)
            .map(|m| {
                let (s, c) = ((m as f64 + 0.5) * dth).sin_cos();
                BoundaryPoint { z: [c, s], normal: [-c, -s], curvature: 1.0, weight: dth }
            })
            .collect();
        let mut planner = FftPlanner::new();
        let spacing = faces[1];
        Ok(Self {
            n_r,
            n_theta,
            grading,
            source: t_rad[n_r - 1] / ring_area[n_r - 1],
            faces,
            centers,
            spec: spec.clone(),
            nodes: NodeSet { nodes, weights, delta, boundary, spacing },
            ring_area,
            modes,
            phi_vals,
            fft: planner.plan_fft_forward(n_theta),
            ifft: planner.plan_fft_inverse(n_theta),
            sigma: OnceLock::new(),
        })
    }

    /// Smallest eigenvalue (the k = 0 radial ground state).
    pub fn lambda1(&self) -> f64 {
        self.modes[0].1.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// g(A)u for g given through its values on each mode's eigenvalues.
    fn matrix_function(&self, u: &[f64], g: &[Vec<f64>]) -> Vec<f64> {
        let (nr, nt) = (self.n_r, self.n_theta);
        let mut rings: Vec<Vec<Complex64>> = (0..nr)
            .map(|i| {
                let s = self.ring_area[i].sqrt();
                let mut v: Vec<Complex64> = (0..nt).map(|m| Complex64::new(s * u[i * nt + m], 0.0)).collect();
                self.fft.process(&mut v);
                v
            })
            .collect();
        let cols: Vec<(usize, Vec<Complex64>)> = (0..nt)
            .into_par_iter()
            .map(|k| {
                let kk = k.min(nt - k);
                let (q, _) = &self.modes[kk];
                let col: Vec<Complex64> = (0..nr).map(|i| rings[i][k]).collect();
                let mut proj = vec![Complex64::new(0.0, 0.0); nr];
                for (e, p) in proj.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..nr {
                        acc += col[i] * q[(i, e)];
                    }
                    *p = acc * g[kk][e];
                }
                let out: Vec<Complex64> =
                    (0..nr).map(|i| (0..nr).map(|e| proj[e] * q[(i, e)]).sum::<Complex64>()).collect();
                (k, out)
            })
            .collect();
        for (k, col) in cols {
            for i in 0..nr {
                rings[i][k] = col[i];
            }
        }
        let mut out = vec![0.0; nr * nt];
        for (i, ring) in rings.iter_mut().enumerate() {
            self.ifft.process(ring);
            let s = 1.0 / (self.ring_area[i].sqrt() * nt as f64);
            for m in 0..nt {
                out[i * nt + m] = ring[m].re * s;
            }
        }
        out
    }

    fn with<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<Vec<f64>> {
        self.modes.iter().zip(&self.phi_vals).map(|((_, l), p)| l.iter().zip(p).map(|(a, b)| f(*a, *b)).collect()).collect()
    }

    /// Classical Green operator A⁻¹ (the φ(λ) = λ case) for reference.
    pub fn green_classic(&self, f: &[f64]) -> Vec<f64> {
        self.matrix_function(f, &self.with(|l, _| 1.0 / l))
    }

    /// e^{−tA}u.
    pub fn heat(&self, t: f64, u: &[f64]) -> Vec<f64> {
        self.matrix_function(u, &self.with(|l, _| (-t * l).exp()))
    }

    /// Boundary source vector of a boundary density.
    pub fn source_vector(&self, zeta: &[f64]) -> Vec<f64> {
        let mut b = vec![0.0; self.nodes.len()];
        let off = (self.n_r - 1) * self.n_theta;
        for m in 0..self.n_theta {
            b[off + m] = self.source * zeta[m];
        }
        b
    }

    pub fn cell_of(&self, x: Point) -> Option<usize> {
        let r = norm(x);
        if r >= 1.0 {
            return None;
        }
        let i = self.faces.partition_point(|&f| f <= r).saturating_sub(1).min(self.n_r - 1);
        let th = x[1].atan2(x[0]).rem_euclid(2.0 * PI);
        let m = ((th / (2.0 * PI) * self.n_theta as f64).floor() as usize).min(self.n_theta - 1);
        Some(i * self.n_theta + m)
    }

    /// Refinement family: (n_r, n_θ) multiplied by 2^level.
    pub fn family(spec: &BernsteinSpec, n_r: usize, n_theta: usize, grading: f64, levels: usize) -> Result<Vec<Self>> {
        (0..levels).map(|l| Self::new(spec, n_r << l, n_theta << l, grading)).collect()
    }
}

impl NodeModel for PolarFvModel {
    fn node_set(&self) -> &NodeSet {
        &self.nodes
    }

    fn phi(&self) -> &BernsteinSpec {
        &self.spec
    }

    fn green(&self, f: &[f64]) -> Vec<f64> {
        self.matrix_function(f, &self.with(|_, p| 1.0 / p))
    }

    fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.matrix_function(u, &self.phi_vals)
    }

    fn poisson(&self, zeta: &[f64]) -> Vec<f64> {
        self.green(&self.source_vector(zeta))
    }

    fn poisson_sigma(&self) -> &[f64] {
        self.sigma.get_or_init(|| self.poisson(&vec![1.0; self.n_theta]))
    }

    /// Bilinear in (r, θ) between cell centres; zero Dirichlet data outside
    /// the last ring.
    fn eval(&self, u: &[f64], x: Point) -> f64 {
        let r = norm(x);
        if r >= 1.0 {
            return 0.0;
        }
        let nt = self.n_theta;
        let th = x[1].atan2(x[0]).rem_euclid(2.0 * PI) / (2.0 * PI) * nt as f64 - 0.5;
        let m0 = th.floor();
        let wt = th - m0;
        let m0 = (m0 as isize).rem_euclid(nt as isize) as usize;
        let m1 = (m0 + 1) % nt;
        let ring = |i: usize| (1.0 - wt) * u[i * nt + m0] + wt * u[i * nt + m1];
        let k = self.centers.partition_point(|&c| c <= r);
        if k == 0 {
            return ring(0);
        }
        if k >= self.n_r {
            let c = self.centers[self.n_r - 1];
            return ring(self.n_r - 1) * (1.0 - r) / (1.0 - c);
        }
        let (a, b) = (self.centers[k - 1], self.centers[k]);
        let w = (r - a) / (b - a);
        (1.0 - w) * ring(k - 1) + w * ring(k)
    }

    fn label(&self) -> String {
        format!("polar-fv {}x{} q={}", self.n_r, self.n_theta, self.grading)
    }
}
