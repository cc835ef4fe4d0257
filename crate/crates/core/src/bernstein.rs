//! Complete Bernstein functions φ used as Laplace exponents of the
//! subordinator: evaluation, conjugation, Lévy and potential densities.
//!
//! Catalog: stable λ^s, positive sums Σ wᵢλ^{sᵢ}, λ^s·log(1+λ)^r with
//! s + r ≤ 1, log-log tabulated exponents, and the classical φ(λ) = λ used
//! only as a sanity limit.  A spec may be flagged `conjugated`, meaning it
//! represents λ/ψ(λ) for the base ψ described by (kind, params).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{numeric, PhidError, Result};
use crate::quad::compensated_sum;
use crate::special::gamma;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiKind {
    Stable,
    StableSum,
    LogStable,
    Tabulated,
    Classical,
}

/// Weak-scaling constants: a1 λ^δ1 ≤ φ(λt)/φ(t) ≤ a2 λ^δ2 for t, λ ≥ 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub a1: f64,
    pub a2: f64,
    pub delta1: f64,
    pub delta2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinSpec {
    pub kind: PhiKind,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub conjugated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_scaling: Option<Scaling>,
}

/// φ together with φ* = λ/φ.
#[derive(Clone, Debug)]
pub struct ConjugatePair {
    pub spec: BernsteinSpec,
    pub conj: BernsteinSpec,
}

impl ConjugatePair {
    /// Potential density 𝔳 of the conjugate.
    pub fn conj_potential_density(&self, t: f64) -> Result<f64> {
        self.conj.potential_density(t)
    }
}

const STEHFEST_TERMS: usize = 14;
const TALBOT_NODES: usize = 32;

fn in_unit(s: f64) -> bool {
    s > 0.0 && s < 1.0
}

impl BernsteinSpec {
    pub fn stable(s: f64) -> Result<Self> {
        let sp = Self { kind: PhiKind::Stable, params: vec![s], conjugated: false, declared_scaling: None };
        sp.validate()?;
        Ok(sp)
    }

    pub fn stable_sum(terms: &[(f64, f64)]) -> Result<Self> {
        let params = terms.iter().flat_map(|&(w, s)| [w, s]).collect();
        let sp = Self { kind: PhiKind::StableSum, params, conjugated: false, declared_scaling: None };
        sp.validate()?;
        Ok(sp)
    }

    pub fn log_stable(s: f64, r: f64) -> Result<Self> {
        let sp = Self { kind: PhiKind::LogStable, params: vec![s, r], conjugated: false, declared_scaling: None };
        sp.validate()?;
        Ok(sp)
    }

    /// Log-log interpolated table (λᵢ, φ(λᵢ)), extrapolated by the end slopes.
    pub fn tabulated(lam: &[f64], val: &[f64]) -> Result<Self> {
        if lam.len() != val.len() {
            return Err(PhidError::Invalid("table columns differ in length".into()));
        }
        let params = lam.iter().zip(val).flat_map(|(&l, &v)| [l, v]).collect();
        let sp = Self { kind: PhiKind::Tabulated, params, conjugated: false, declared_scaling: None };
        sp.validate()?;
        Ok(sp)
    }

    /// φ(λ) = λ.  Outside the WSC class (unit drift); kept as the classical limit.
    pub fn classical() -> Self {
        Self { kind: PhiKind::Classical, params: vec![], conjugated: false, declared_scaling: None }
    }

    pub fn with_scaling(mut self, sc: Scaling) -> Self {
        self.declared_scaling = Some(sc);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let bad = |m: &str| Err(PhidError::Domain(m.to_string()));
        match self.kind {
            PhiKind::Stable => {
                if p.len() != 1 || !in_unit(p[0]) {
                    return bad("stable index s must lie in (0,1)");
                }
            }
            PhiKind::StableSum => {
                if p.is_empty() || p.len() % 2 != 0 {
                    return bad("stable sum needs (weight, index) pairs");
                }
                for c in p.chunks(2) {
                    if !(c[0] > 0.0) || !in_unit(c[1]) {
                        return bad("stable sum weights must be positive and indices in (0,1)");
                    }
                }
            }
            PhiKind::LogStable => {
                if p.len() != 2 || !in_unit(p[0]) || !(p[1] > 0.0) || p[0] + p[1] > 1.0 {
                    return bad("λ^s log(1+λ)^r needs s in (0,1), r > 0, s + r ≤ 1");
                }
            }
            PhiKind::Tabulated => {
                if p.len() < 6 || p.len() % 2 != 0 {
                    return bad("table needs at least three (λ, φ) rows");
                }
                let rows: Vec<_> = p.chunks(2).collect();
                for w in rows.windows(2) {
                    if !(w[0][0] > 0.0 && w[1][0] > w[0][0] && w[0][1] > 0.0 && w[1][1] >= w[0][1]) {
                        return bad("table must be positive and increasing in both columns");
                    }
                }
                let slopes = self.table_slopes();
                if slopes.iter().any(|&q| !(q >= 0.0 && q <= 1.0)) {
                    return bad("table log-log slopes must lie in [0,1]");
                }
                if !in_unit(slopes[0]) || !in_unit(*slopes.last().unwrap()) {
                    return bad("table end slopes must lie in (0,1)");
                }
            }
            PhiKind::Classical => {
                if !p.is_empty() {
                    return bad("classical exponent takes no parameters");
                }
            }
        }
        if let Some(sc) = self.declared_scaling {
            if !(sc.a1 > 0.0 && sc.a2 > 0.0 && in_unit(sc.delta1) && in_unit(sc.delta2) && sc.delta1 <= sc.delta2) {
                return bad("declared scaling constants out of range");
            }
        }
        Ok(())
    }

    /// Stable index when φ is exactly λ^s.
    pub fn stable_index(&self) -> Option<f64> {
        match (self.kind, self.conjugated) {
            (PhiKind::Stable, false) => Some(self.params[0]),
            (PhiKind::Stable, true) => Some(1.0 - self.params[0]),
            _ => None,
        }
    }

    /// Drift coefficient b = lim φ(λ)/λ.
    pub fn drift(&self) -> f64 {
        if self.kind == PhiKind::Classical && !self.conjugated {
            1.0
        } else {
            0.0
        }
    }

    fn table_rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.params.chunks(2).map(|c| (c[0].ln(), c[1].ln()))
    }

    fn table_slopes(&self) -> Vec<f64> {
        let r: Vec<_> = self.table_rows().collect();
        r.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect()
    }

    /// (log ψ, d log ψ / d log λ) for the table.
    fn table_eval(&self, lam: f64) -> (f64, f64) {
        let x = lam.ln();
        let r: Vec<_> = self.table_rows().collect();
        let n = r.len();
        let i = if x <= r[0].0 {
            0
        } else if x >= r[n - 1].0 {
            n - 2
        } else {
            r.windows(2).position(|w| x >= w[0].0 && x <= w[1].0).unwrap()
        };
        let q = (r[i + 1].1 - r[i].1) / (r[i + 1].0 - r[i].0);
        (r[i].1 + q * (x - r[i].0), q)
    }

    fn base(&self, lam: f64) -> f64 {
        let p = &self.params;
        match self.kind {
            PhiKind::Stable => lam.powf(p[0]),
            PhiKind::StableSum => p.chunks(2).map(|c| c[0] * lam.powf(c[1])).sum(),
            PhiKind::LogStable => lam.powf(p[0]) * lam.ln_1p().powf(p[1]),
            PhiKind::Tabulated => self.table_eval(lam).0.exp(),
            PhiKind::Classical => lam,
        }
    }

    fn base_prime(&self, lam: f64) -> f64 {
        let p = &self.params;
        match self.kind {
            PhiKind::Stable => p[0] * lam.powf(p[0] - 1.0),
            PhiKind::StableSum => p.chunks(2).map(|c| c[0] * c[1] * lam.powf(c[1] - 1.0)).sum(),
            PhiKind::LogStable => {
                let (s, r) = (p[0], p[1]);
                let l = lam.ln_1p();
                s * lam.powf(s - 1.0) * l.powf(r) + r * lam.powf(s) * l.powf(r - 1.0) / (1.0 + lam)
            }
            PhiKind::Tabulated => {
                let h = 1e-6 * lam;
                (self.base(lam + h) - self.base(lam - h)) / (2.0 * h)
            }
            PhiKind::Classical => 1.0,
        }
    }

    fn base_c(&self, z: Complex64) -> Option<Complex64> {
        let p = &self.params;
        match self.kind {
            PhiKind::Stable => Some(z.powf(p[0])),
            PhiKind::StableSum => Some(p.chunks(2).map(|c| z.powf(c[1]) * c[0]).sum()),
            PhiKind::LogStable => Some(z.powf(p[0]) * (z + 1.0).ln().powf(p[1])),
            PhiKind::Tabulated => None,
            PhiKind::Classical => Some(z),
        }
    }

    fn base_prime_c(&self, z: Complex64) -> Option<Complex64> {
        let p = &self.params;
        match self.kind {
            PhiKind::Stable => Some(z.powf(p[0] - 1.0) * p[0]),
            PhiKind::StableSum => Some(p.chunks(2).map(|c| z.powf(c[1] - 1.0) * (c[0] * c[1])).sum()),
            PhiKind::LogStable => {
                let (s, r) = (p[0], p[1]);
                let l = (z + 1.0).ln();
                Some(z.powf(s - 1.0) * l.powf(r) * s + z.powf(s) * l.powf(r - 1.0) * r / (z + 1.0))
            }
            PhiKind::Tabulated => None,
            PhiKind::Classical => Some(Complex64::new(1.0, 0.0)),
        }
    }

    /// φ(λ) without the domain check.
    #[inline]
    pub fn value(&self, lam: f64) -> f64 {
        if self.conjugated {
            lam / self.base(lam)
        } else {
            self.base(lam)
        }
    }

    /// φ′(λ) without the domain check.
    pub fn derivative(&self, lam: f64) -> f64 {
        if self.conjugated {
            let b = self.base(lam);
            (b - lam * self.base_prime(lam)) / (b * b)
        } else {
            self.base_prime(lam)
        }
    }

    /// φ on the cut plane C \ (−∞, 0], principal branches.
    pub fn value_c(&self, z: Complex64) -> Option<Complex64> {
        let b = self.base_c(z)?;
        Some(if self.conjugated { z / b } else { b })
    }

    fn derivative_c(&self, z: Complex64) -> Option<Complex64> {
        let bp = self.base_prime_c(z)?;
        if self.conjugated {
            let b = self.base_c(z)?;
            Some((b - z * bp) / (b * b))
        } else {
            Some(bp)
        }
    }

    /// φ* = λ/φ.
    pub fn conjugate(&self) -> BernsteinSpec {
        let mut c = self.clone();
        c.declared_scaling = None;
        if self.kind == PhiKind::Stable {
            // λ/λ^s is stable 1 − s; keep the catalog form
            c.params = vec![1.0 - self.params[0]];
            c.conjugated = false;
            if self.conjugated {
                c.params = vec![self.params[0]];
            }
            if let Some(sc) = self.declared_scaling {
                c.declared_scaling = Some(Scaling {
                    a1: 1.0 / sc.a2,
                    a2: 1.0 / sc.a1,
                    delta1: 1.0 - sc.delta2,
                    delta2: 1.0 - sc.delta1,
                });
            }
        } else {
            c.conjugated = !self.conjugated;
        }
        c
    }

    /// Potential density 𝔲: ∫ e^{−λt}𝔲(t)dt = 1/φ(λ).
    pub fn potential_density(&self, t: f64) -> Result<f64> {
        check_positive(t)?;
        match (self.kind, self.conjugated) {
            (PhiKind::Stable, _) => {
                let s = self.stable_index().unwrap();
                Ok(t.powf(s - 1.0) / gamma(s))
            }
            (PhiKind::Classical, false) => Ok(1.0),
            (PhiKind::Classical, true) => {
                Err(PhidError::Unsupported("φ ≡ 1 has no potential density".into()))
            }
            // 1/(λ/ψ) = ψ/λ is the transform of ψ's Lévy tail
            (PhiKind::StableSum, true) => Ok(self.base_levy_tail_closed(t).unwrap()),
            _ => self.invert(t, InvTarget::Potential),
        }
    }

    fn base_levy_tail_closed(&self, t: f64) -> Option<f64> {
        match self.kind {
            PhiKind::Stable | PhiKind::StableSum => {
                let v = if self.kind == PhiKind::Stable { vec![1.0, self.params[0]] } else { self.params.clone() };
                Some(v.chunks(2).map(|c| c[0] * t.powf(-c[1]) / gamma(1.0 - c[1])).sum())
            }
            _ => None,
        }
    }

    /// Lévy tail μ̄(t) = μ((t, ∞)); transform of φ(λ)/λ.
    pub fn levy_tail(&self, t: f64) -> Result<f64> {
        check_positive(t)?;
        match (self.kind, self.conjugated) {
            (PhiKind::Classical, false) => Ok(0.0),
            (PhiKind::Classical, true) => Err(PhidError::Unsupported("φ ≡ 1 is not a Bernstein exponent of a subordinator with Lévy tail".into())),
            (PhiKind::Stable, _) => {
                let s = self.stable_index().unwrap();
                Ok(t.powf(-s) / gamma(1.0 - s))
            }
            (PhiKind::StableSum, false) => Ok(self.base_levy_tail_closed(t).unwrap()),
            _ => self.invert(t, InvTarget::Tail),
        }
    }

    /// Lévy density μ(t); t·μ(t) is the inverse transform of φ′.
    pub fn levy_density(&self, t: f64) -> Result<f64> {
        check_positive(t)?;
        match (self.kind, self.conjugated) {
            (PhiKind::Classical, false) => Ok(0.0),
            (PhiKind::Classical, true) => Err(PhidError::Unsupported("φ ≡ 1 has no Lévy density".into())),
            (PhiKind::Stable, _) => {
                let s = self.stable_index().unwrap();
                Ok(s * t.powf(-1.0 - s) / gamma(1.0 - s))
            }
            (PhiKind::StableSum, false) => Ok(self
                .params
                .chunks(2)
                .map(|c| c[0] * c[1] * t.powf(-1.0 - c[1]) / gamma(1.0 - c[1]))
                .sum()),
            _ => Ok(self.invert(t, InvTarget::Levy)? / t),
        }
    }

    fn transform(&self, target: InvTarget, lam: f64) -> f64 {
        match target {
            InvTarget::Potential => 1.0 / self.value(lam),
            InvTarget::Tail => self.value(lam) / lam,
            InvTarget::Levy => self.derivative(lam),
        }
    }

    fn transform_c(&self, target: InvTarget, z: Complex64) -> Option<Complex64> {
        Some(match target {
            InvTarget::Potential => self.value_c(z)?.inv(),
            InvTarget::Tail => self.value_c(z)? / z,
            InvTarget::Levy => self.derivative_c(z)?,
        })
    }

    fn invert(&self, t: f64, target: InvTarget) -> Result<f64> {
        let f = |lam: f64| self.transform(target, lam);
        let a = stehfest(&f, t, STEHFEST_TERMS);
        let b = stehfest(&f, t, STEHFEST_TERMS - 2);
        let c = stehfest(&f, t, STEHFEST_TERMS + 2);
        let spread = (a - b).abs().max((a - c).abs()) / a.abs().max(1e-300);
        if spread <= 1e-4 && a > 0.0 {
            return Ok(a);
        }
        match self.transform_c(target, Complex64::new(1.0, 0.0)) {
            Some(_) => {
                let v = talbot(&|z| self.transform_c(target, z).unwrap(), t, TALBOT_NODES);
                let v2 = talbot(&|z| self.transform_c(target, z).unwrap(), t, TALBOT_NODES + 8);
                if v.is_finite() && (v - v2).abs() <= 1e-6 * v.abs().max(1e-300) {
                    Ok(v)
                } else {
                    Err(numeric(
                        "Laplace inversion",
                        format!("t = {t:e}: Stehfest spread {spread:e}, Talbot {v:e} vs {v2:e}"),
                    ))
                }
            }
            None => Err(numeric(
                "Laplace inversion",
                format!("t = {t:e}: Stehfest spread {spread:e} and no complex extension for Talbot"),
            )),
        }
    }
}

#[derive(Clone, Copy)]
enum InvTarget {
    Potential,
    Tail,
    Levy,
}

fn check_positive(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(PhidError::Domain(format!("argument must be positive, got {x}")))
    }
}

/// Gaver–Stehfest weights for even n.
pub fn stehfest_weights(n: usize) -> Vec<f64> {
    assert!(n % 2 == 0 && n >= 2);
    let half = n / 2;
    let fact = |k: usize| (1..=k).fold(1.0f64, |a, i| a * i as f64);
    (1..=n)
        .map(|k| {
            let lo = (k + 1) / 2;
            let hi = k.min(half);
            let s: f64 = (lo..=hi)
                .map(|j| {
                    (j as f64).powi(half as i32) * fact(2 * j)
                        / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k))
                })
                .sum();
            if (k + half) % 2 == 0 {
                s
            } else {
                -s
            }
        })
        .collect()
}

/// Gaver–Stehfest inversion with compensated accumulation.
pub fn stehfest(f: &dyn Fn(f64) -> f64, t: f64, n: usize) -> f64 {
    let ln2t = std::f64::consts::LN_2 / t;
    let w = stehfest_weights(n);
    ln2t * compensated_sum(w.iter().enumerate().map(|(k, wk)| wk * f((k + 1) as f64 * ln2t)))
}

/// Fixed Talbot contour (Abate–Valkó) with m nodes.
pub fn talbot(f: &dyn Fn(Complex64) -> Complex64, t: f64, m: usize) -> f64 {
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut acc = 0.5 * (f(Complex64::new(r, 0.0)) * (r * t).exp()).re;
    for k in 1..m {
        let th = k as f64 * std::f64::consts::PI / m as f64;
        let cot = th.cos() / th.sin();
        let s = Complex64::new(r * th * cot, r * th);
        let sigma = th + (th * cot - 1.0) * cot;
        acc += ((s * t).exp() * f(s) * Complex64::new(1.0, sigma)).re;
    }
    r / m as f64 * acc
}

/// φ(λ) with the domain check.
pub fn phi_eval(spec: &BernsteinSpec, lam: f64) -> Result<f64> {
    check_positive(lam)?;
    Ok(spec.value(lam))
}

/// φ′(λ) with the domain check.
pub fn phi_prime(spec: &BernsteinSpec, lam: f64) -> Result<f64> {
    check_positive(lam)?;
    Ok(spec.derivative(lam))
}

pub fn conjugate(spec: &BernsteinSpec) -> ConjugatePair {
    ConjugatePair { spec: spec.clone(), conj: spec.conjugate() }
}

pub fn potential_density(spec: &BernsteinSpec, t: f64) -> Result<f64> {
    spec.potential_density(t)
}

pub fn levy_density(spec: &BernsteinSpec, t: f64) -> Result<f64> {
    spec.levy_density(t)
}

/// Reciprocal of the constant 1 − 2e^{−1} in the density upper bounds.
pub fn density_bound_constant() -> f64 {
    1.0 / (1.0 - 2.0 * (-1.0f64).exp())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingReport {
    pub delta1_hat: f64,
    pub delta2_hat: f64,
    pub n_pairs: usize,
    /// Some(true) when declared exponents bracket the empirical ones.
    pub declared_brackets: Option<bool>,
    pub valid: bool,
}

/// Empirical WSC exponents over t ∈ t_grid, λ ∈ lam_grid (λ > 1 only).
pub fn verify_wsc(spec: &BernsteinSpec, t_grid: &[f64], lam_grid: &[f64]) -> Result<ScalingReport> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut n = 0;
    for &t in t_grid {
        if !(1.0..=1e6).contains(&t) {
            return Err(PhidError::Invalid(format!("t grid point {t} outside [1, 1e6]")));
        }
        let ft = spec.value(t);
        for &l in lam_grid {
            if !(1.0..=1e6).contains(&l) {
                return Err(PhidError::Invalid(format!("λ grid point {l} outside [1, 1e6]")));
            }
            if l <= 1.0 {
                continue;
            }
            let e = (spec.value(l * t) / ft).ln() / l.ln();
            lo = lo.min(e);
            hi = hi.max(e);
            n += 1;
        }
    }
    if n == 0 {
        return Err(PhidError::Invalid("λ grid needs points above 1".into()));
    }
    let declared_brackets = spec.declared_scaling.map(|d| d.delta1 <= lo + 1e-12 && d.delta2 >= hi - 1e-12);
    Ok(ScalingReport {
        delta1_hat: lo,
        delta2_hat: hi,
        n_pairs: n,
        declared_brackets,
        valid: lo > 0.0 && lo <= hi && hi < 1.0,
    })
}

impl BernsteinSpec {
    /// Installs empirical scaling constants when none are declared.
    pub fn with_empirical_scaling(mut self, t_grid: &[f64], lam_grid: &[f64]) -> Result<Self> {
        if self.declared_scaling.is_none() {
            let r = verify_wsc(&self, t_grid, lam_grid)?;
            if !r.valid {
                return Err(PhidError::Domain(format!(
                    "empirical exponents ({}, {}) violate WSC",
                    r.delta1_hat, r.delta2_hat
                )));
            }
            self.declared_scaling = Some(Scaling { a1: 1.0, a2: 1.0, delta1: r.delta1_hat, delta2: r.delta2_hat });
        }
        Ok(self)
    }
}

/// Log-spaced grid of n points on [a, b].
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n.max(2) - 1) as f64).exp()).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShapeReport {
    /// max violation of 1∧λ ≤ φ(λt)/φ(t) ≤ 1∨λ (relative).
    pub global_scaling_violation: f64,
    pub nondecreasing: bool,
    pub concave: bool,
    /// inf of φ′(λ)λ/φ(λ) over λ ≥ 1 on the grid.
    pub derivative_floor: f64,
    /// sup of φ′(λ)λ/φ(λ) over the grid.
    pub derivative_ceiling: f64,
}

/// Sampled shape checks on a log grid over [1e-4, 1e6].
pub fn shape_report(spec: &BernsteinSpec) -> ShapeReport {
    let g = log_grid(1e-4, 1e6, 121);
    let mut viol: f64 = 0.0;
    for &t in &g {
        for &l in &g {
            let q = spec.value(l * t) / spec.value(t);
            let lo = l.min(1.0);
            let hi = l.max(1.0);
            viol = viol.max((lo - q) / lo).max((q - hi) / hi);
        }
    }
    let v: Vec<f64> = g.iter().map(|&l| spec.value(l)).collect();
    let nondecreasing = v.windows(2).all(|w| w[1] >= w[0]);
    // concavity via secant slopes on the log grid
    let sl: Vec<f64> = (0..g.len() - 1).map(|i| (v[i + 1] - v[i]) / (g[i + 1] - g[i])).collect();
    let concave = sl.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let mut floor = f64::INFINITY;
    let mut ceil: f64 = 0.0;
    for &l in &g {
        let e = spec.derivative(l) * l / spec.value(l);
        ceil = ceil.max(e);
        if l >= 1.0 {
            floor = floor.min(e);
        }
    }
    ShapeReport {
        global_scaling_violation: viol.max(0.0),
        nondecreasing,
        concave,
        derivative_floor: floor,
        derivative_ceiling: ceil,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityBoundReport {
    /// max over t of 𝔲(t) / [C φ′(1/t)/(t²φ(1/t)²)]; ≤ 1 means the bound holds.
    pub potential_ratio: f64,
    /// max over t of μ(t) / [C φ′(1/t)/t²].
    pub levy_ratio: f64,
    /// sup_{t≥1} μ(t)/μ(t+1).
    pub levy_shift_constant: f64,
    pub potential_decreasing: bool,
    pub levy_decreasing: bool,
}

pub fn density_bounds(spec: &BernsteinSpec) -> Result<DensityBoundReport> {
    let c = density_bound_constant();
    let ts = log_grid(1e-3, 1e3, 61);
    let mut pr: f64 = 0.0;
    let mut lr: f64 = 0.0;
    let mut pu = Vec::with_capacity(ts.len());
    let mut pm = Vec::with_capacity(ts.len());
    for &t in &ts {
        let u = spec.potential_density(t)?;
        let m = spec.levy_density(t)?;
        let l = 1.0 / t;
        let fp = spec.derivative(l);
        let f = spec.value(l);
        pr = pr.max(u / (c * fp / (t * t * f * f)));
        lr = lr.max(m / (c * fp / (t * t)));
        pu.push(u);
        pm.push(m);
    }
    let mut shift: f64 = 0.0;
    for &t in ts.iter().filter(|&&t| t >= 1.0) {
        shift = shift.max(spec.levy_density(t)? / spec.levy_density(t + 1.0)?);
    }
    Ok(DensityBoundReport {
        potential_ratio: pr,
        levy_ratio: lr,
        levy_shift_constant: shift,
        potential_decreasing: pu.windows(2).all(|w| w[1] < w[0]),
        levy_decreasing: pm.windows(2).all(|w| w[1] < w[0]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stehfest_weights_sum_to_zero() {
        let w = stehfest_weights(14);
        assert!(compensated_sum(w.iter().copied()).abs() < 1e-6);
    }

    #[test]
    fn conjugate_of_conjugate_is_identity() {
        let p = BernsteinSpec::stable_sum(&[(0.5, 0.3), (0.5, 0.7)]).unwrap();
        assert_eq!(p.conjugate().conjugate(), p);
        let s = BernsteinSpec::stable(0.3).unwrap();
        let cc = s.conjugate().conjugate();
        assert_eq!(cc.kind, PhiKind::Stable);
        assert!((cc.params[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn talbot_inverts_exponential() {
        // 1/(λ+1) ↔ e^{−t}
        let v = talbot(&|z| (z + 1.0).inv(), 0.7, 32);
        assert!((v - (-0.7f64).exp()).abs() < 1e-10);
    }
}
