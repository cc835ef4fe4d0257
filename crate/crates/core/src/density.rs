//! Time densities entering subordination integrals (𝔲, 𝔳, μ) and the
//! two integral transforms the kernels need: the small-time heat integral
//! ∫₀^{t₀} t^{−m}e^{−q/t}ρ(t)dt and the Laplace tail ∫_{t₀}^∞ e^{−λt}ρ(t)dt.

use crate::bernstein::{BernsteinSpec, PhiKind};
use crate::error::{numeric, PhidError, Result};
use crate::quad::{adaptive_log, adaptive_to_inf};
use crate::special::{gamma, upper_gamma};

#[derive(Clone, Debug)]
pub enum TimeDensity {
    /// Σ c t^{α−1}
    Powers(Vec<(f64, f64)>),
    /// log-log table with power-law extrapolation at both ends
    Table { ln_t: Vec<f64>, ln_v: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Potential,
    Levy,
}

impl TimeDensity {
    pub fn build(spec: &BernsteinSpec, which: Which) -> Result<Self> {
        let closed = match (spec.kind, spec.conjugated, which) {
            (PhiKind::Stable, _, Which::Potential) => {
                let s = spec.stable_index().unwrap();
                Some(vec![(1.0 / gamma(s), s)])
            }
            (PhiKind::Stable, _, Which::Levy) => {
                let s = spec.stable_index().unwrap();
                Some(vec![(s / gamma(1.0 - s), -s)])
            }
            (PhiKind::Classical, false, Which::Potential) => Some(vec![(1.0, 1.0)]),
            (PhiKind::Classical, false, Which::Levy) => {
                return Err(PhidError::Unsupported("φ(λ) = λ has no Lévy density".into()))
            }
            (PhiKind::StableSum, false, Which::Levy) => {
                Some(spec.params.chunks(2).map(|c| (c[0] * c[1] / gamma(1.0 - c[1]), -c[1])).collect())
            }
            (PhiKind::StableSum, true, Which::Potential) => {
                Some(spec.params.chunks(2).map(|c| (c[0] / gamma(1.0 - c[1]), 1.0 - c[1])).collect())
            }
            _ => None,
        };
        if let Some(p) = closed {
            return Ok(TimeDensity::Powers(p));
        }
        let n = 360;
        let (lo, hi) = (-12.0f64, 4.0f64);
        let mut ln_t = Vec::with_capacity(n);
        let mut ln_v = Vec::with_capacity(n);
        for k in 0..n {
            let lt = (lo + (hi - lo) * k as f64 / (n - 1) as f64) * std::f64::consts::LN_10;
            let t = lt.exp();
            let v = match which {
                Which::Potential => spec.potential_density(t)?,
                Which::Levy => spec.levy_density(t)?,
            };
            if !(v > 0.0) {
                return Err(numeric("density table", format!("non-positive density {v:e} at t = {t:e}")));
            }
            ln_t.push(lt);
            ln_v.push(v.ln());
        }
        Ok(TimeDensity::Table { ln_t, ln_v })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeDensity::Powers(p) => p.iter().map(|&(c, a)| c * t.powf(a - 1.0)).sum(),
            TimeDensity::Table { ln_t, ln_v } => {
                let x = t.ln();
                let n = ln_t.len();
                let k = if x <= ln_t[0] {
                    0
                } else if x >= ln_t[n - 1] {
                    n - 2
                } else {
                    ln_t.partition_point(|&v| v <= x) - 1
                };
                let k = k.min(n - 2);
                let w = (x - ln_t[k]) / (ln_t[k + 1] - ln_t[k]);
                (ln_v[k] + w * (ln_v[k + 1] - ln_v[k])).exp()
            }
        }
    }

    /// ∫₀^{t₀} t^{−m} e^{−q/t} ρ(t) dt, q > 0.
    pub fn heat_integral(&self, q: f64, m: f64, t0: f64) -> f64 {
        if q <= 0.0 {
            return f64::INFINITY;
        }
        if q / t0 > 700.0 {
            return 0.0;
        }
        match self {
            TimeDensity::Powers(p) => p.iter().map(|&(c, a)| c * q.powf(a - m) * upper_gamma(m - a, q / t0)).sum(),
            TimeDensity::Table { .. } => {
                let lo = (q / 700.0).min(t0 * 0.5);
                adaptive_log(|t| t.powf(-m) * (-q / t).exp() * self.eval(t), lo, t0, 1e-300, 1e-10)
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN)
            }
        }
    }

    /// ∫_{t₀}^∞ e^{−λt} ρ(t) dt.
    pub fn laplace_tail(&self, lam: f64, t0: f64) -> Result<f64> {
        match self {
            TimeDensity::Powers(p) => Ok(p.iter().map(|&(c, a)| c * lam.powf(-a) * upper_gamma(a, lam * t0)).sum()),
            TimeDensity::Table { .. } => {
                let r = adaptive_to_inf(|u| (-(lam * t0) - u).exp() * self.eval(t0 + u / lam), 0.0, 1e-300, 1e-11)?;
                Ok(r.value / lam)
            }
        }
    }

    /// ∫_{t₀}^∞ ρ(t) dt (finite for Lévy densities).
    pub fn tail(&self, t0: f64) -> Result<f64> {
        match self {
            TimeDensity::Powers(p) => {
                let mut s = 0.0;
                for &(c, a) in p {
                    if a >= 0.0 {
                        return Err(PhidError::Domain("density not integrable at infinity".into()));
                    }
                    s += c * t0.powf(a) / -a;
                }
                Ok(s)
            }
            TimeDensity::Table { .. } => Ok(adaptive_to_inf(|t| self.eval(t), t0, 1e-300, 1e-10)?.value),
        }
    }

    /// ∫₀^{t₀} g(t) ρ(t) dt for a bounded g that vanishes rapidly as t → 0
    /// below `t_lo`.
    pub fn weighted(&self, g: impl Fn(f64) -> f64, t_lo: f64, t0: f64) -> Result<f64> {
        if t_lo >= t0 {
            return Ok(0.0);
        }
        Ok(adaptive_log(|t| g(t) * self.eval(t), t_lo, t0, 1e-300, 1e-10)?.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_match_quadrature() {
        let spec = BernsteinSpec::stable(0.5).unwrap();
        let u = TimeDensity::build(&spec, Which::Potential).unwrap();
        let q = 0.01;
        let t0 = 0.05;
        let closed = u.heat_integral(q, 1.0, t0);
        let num = adaptive_log(|t| t.powf(-1.0) * (-q / t).exp() * u.eval(t), 1e-6, t0, 1e-300, 1e-12).unwrap().value;
        assert!((closed - num).abs() < 1e-9 * num);
        let tail = u.laplace_tail(3.0, t0).unwrap();
        let num = adaptive_to_inf(|t| (-3.0 * t).exp() * u.eval(t), t0, 1e-300, 1e-12).unwrap().value;
        assert!((tail - num).abs() < 1e-9 * num);
    }

    #[test]
    fn table_density_tracks_closed_form() {
        // a log-log table of λ^{1/2} goes through numerical inversion
        let lam = [1e-3, 1.0, 1e3];
        let val: Vec<f64> = lam.iter().map(|l: &f64| l.sqrt()).collect();
        let spec = BernsteinSpec::tabulated(&lam, &val).unwrap();
        let tab = TimeDensity::build(&spec, Which::Potential).unwrap();
        for &t in &[1e-6f64, 1e-3, 0.3, 10.0] {
            let want = t.powf(-0.5) / std::f64::consts::PI.sqrt();
            assert!((tab.eval(t) - want).abs() < 1e-4 * want, "t = {t}");
        }
    }
}
