//! Linear and semilinear Dirichlet problems u = G_φ f_u + P_φζ on a node
//! model, with Kato, maximum-principle and threshold verifiers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PhidError, Result};
use crate::model::{NodeModel, NodeSet};

/// t ↦ f(t) before the coupling m.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    /// (t⁺)^p
    Power { p: f64 },
    /// −(t⁺)^p
    Absorption { p: f64 },
    /// |t|^p, signed-datum growth
    AbsPower { p: f64 },
    Sine,
}

impl Profile {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::Power { p } => t.max(0.0).powf(p),
            Profile::Absorption { p } => -t.max(0.0).powf(p),
            Profile::AbsPower { p } => t.abs().powf(p),
            Profile::Sine => t.sin(),
        }
    }
}

/// Λ in the envelope |f(x,t)| ≤ ρ(x)Λ(|t|).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    Power { p: f64 },
    Constant { c: f64 },
}

impl Envelope {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Envelope::Power { p } => t.abs().powf(p),
            Envelope::Constant { c } => c,
        }
    }

    pub fn doubling(&self) -> bool {
        true
    }

    pub fn sublinear(&self) -> bool {
        match *self {
            Envelope::Power { p } => p < 1.0,
            Envelope::Constant { .. } => true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub nonpositive: bool,
    pub nonnegative: bool,
    pub nonincreasing: bool,
    pub nondecreasing: bool,
    pub doubling: bool,
    pub sublinear: bool,
}

/// f(x,t) = m·ρ·profile(t).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub profile: Profile,
    pub m: f64,
    pub rho: f64,
    pub envelope: Envelope,
    pub flags: Flags,
}

impl Nonlinearity {
    pub fn new(profile: Profile, m: f64) -> Result<Self> {
        if !(m >= 0.0) {
            return Err(PhidError::Invalid(format!("coupling m must be ≥ 0, got {m}")));
        }
        let envelope = match profile {
            Profile::Zero => Envelope::Constant { c: 0.0 },
            Profile::Power { p } | Profile::Absorption { p } | Profile::AbsPower { p } => Envelope::Power { p },
            Profile::Sine => Envelope::Constant { c: 1.0 },
        };
        let flags = Flags {
            nonpositive: matches!(profile, Profile::Zero | Profile::Absorption { .. }),
            nonnegative: matches!(profile, Profile::Zero | Profile::Power { .. } | Profile::AbsPower { .. }),
            nonincreasing: matches!(profile, Profile::Zero | Profile::Absorption { .. }),
            nondecreasing: matches!(profile, Profile::Zero | Profile::Power { .. }),
            doubling: envelope.doubling(),
            sublinear: envelope.sublinear(),
        };
        let f = Self { profile, m, rho: 1.0, envelope, flags };
        f.check_lattice()?;
        Ok(f)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.m * self.rho * self.profile.eval(t)
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&t| self.eval(t)).collect()
    }

    /// Spot-checks the envelope and the declared flags on a t-lattice.
    pub fn check_lattice(&self) -> Result<()> {
        let ts: Vec<f64> = (-40..=40).map(|k| (k as f64 / 8.0).sinh()).collect();
        for w in ts.windows(2) {
            let (a, b) = (self.eval(w[0]), self.eval(w[1]));
            let bad = (self.flags.nonincreasing && b > a + 1e-14 * a.abs().max(1.0))
                || (self.flags.nondecreasing && b < a - 1e-14 * a.abs().max(1.0));
            if bad {
                return Err(PhidError::Invalid(format!("monotonicity flag violated near t = {}", w[0])));
            }
        }
        for &t in &ts {
            let v = self.eval(t);
            if (self.flags.nonpositive && v > 0.0) || (self.flags.nonnegative && v < 0.0) {
                return Err(PhidError::Invalid(format!("sign flag violated at t = {t}")));
            }
            let env = self.m * self.rho * self.envelope.eval(t.abs());
            if v.abs() > env * (1.0 + 1e-12) + 1e-300 {
                return Err(PhidError::Invalid(format!("envelope violated at t = {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    Zero,
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub max_iter: usize,
    pub theta: f64,
    pub tol_sup: f64,
    pub tol_l1: f64,
    pub start: Start,
}

impl Default for Controls {
    fn default() -> Self {
        Self { max_iter: 200, theta: 1.0, tol_sup: 1e-8, tol_l1: 1e-6, start: Start::Poisson }
    }
}

#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub f: Nonlinearity,
    /// ζ as a density against σ on the model's boundary nodes.
    pub zeta: Vec<f64>,
    /// λ as a density on interior nodes (linear problem).
    pub lambda: Option<Vec<f64>>,
    pub controls: Controls,
}

impl ProblemSpec {
    pub fn new(f: Nonlinearity, zeta: Vec<f64>) -> Self {
        Self { f, zeta, lambda: None, controls: Controls::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual_sup: Vec<f64>,
    pub residual_l1: Vec<f64>,
    /// Monotone solver: min over nodes of uₙ − uₙ₋₁ per step.
    pub min_increment: Vec<f64>,
    /// Nonpositive solver: sup-width of the odd/even bracket per step.
    pub bracket_width: Vec<f64>,
    pub converged: bool,
    pub classification: Classification,
    /// Smallness certificate C (signed solver) or certified m (monotone).
    pub certificate: Option<f64>,
    /// Upper bracket endpoint when the bracket did not close.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

impl SolveReport {
    fn new(u: Vec<f64>) -> Self {
        Self {
            u,
            iterations: 0,
            residual_sup: vec![],
            residual_l1: vec![],
            min_increment: vec![],
            bracket_width: vec![],
            converged: false,
            classification: Classification::Inconclusive,
            certificate: None,
            upper: None,
            notes: vec![],
        }
    }
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn check_data(ns: &NodeSet, ps: &ProblemSpec) -> Result<()> {
    if ps.zeta.len() != ns.boundary.len() {
        return Err(PhidError::Invalid(format!(
            "ζ has {} values for {} boundary nodes",
            ps.zeta.len(),
            ns.boundary.len()
        )));
    }
    if let Some(l) = &ps.lambda {
        if l.len() != ns.len() {
            return Err(PhidError::Invalid("λ density has the wrong length".into()));
        }
        if !ns.l1_delta(l).is_finite() {
            return Err(PhidError::Invalid("∫δ d|λ| is not finite".into()));
        }
    }
    if ps.zeta.iter().any(|v| !v.is_finite()) {
        return Err(PhidError::Invalid("ζ must have finite total variation".into()));
    }
    Ok(())
}

/// (sup over resolved nodes, δ-weighted L¹) of u − G_φf_u − P_φζ − G_φλ.
pub fn residual(model: &dyn NodeModel, ps: &ProblemSpec, u: &[f64]) -> (f64, f64) {
    let ns = model.node_set();
    let mut src = ps.f.apply(u);
    if let Some(l) = &ps.lambda {
        src = add(&src, l);
    }
    let r = sub(&sub(u, &model.green(&src)), &model.poisson(&ps.zeta));
    (ns.sup_interior(&r), ns.l1_delta(&r))
}

fn record(model: &dyn NodeModel, ps: &ProblemSpec, rep: &mut SolveReport, u: &[f64]) -> (f64, f64) {
    let r = residual(model, ps, u);
    rep.residual_sup.push(r.0);
    rep.residual_l1.push(r.1);
    r
}

fn done(ps: &ProblemSpec, r: (f64, f64)) -> bool {
    r.0 <= ps.controls.tol_sup && r.1 <= ps.controls.tol_l1
}

/// u = G_φλ + P_φζ.
pub fn solve_linear(model: &dyn NodeModel, ps: &ProblemSpec) -> Result<SolveReport> {
    let ns = model.node_set();
    check_data(ns, ps)?;
    let mut u = model.poisson(&ps.zeta);
    if let Some(l) = &ps.lambda {
        u = add(&u, &model.green(l));
    }
    let mut rep = SolveReport::new(u);
    let data = ps.lambda.as_ref().map_or(0.0, |l| ns.l1_delta(l))
        + ps.zeta.iter().zip(&ns.boundary).map(|(z, b)| z.abs() * b.weight).sum::<f64>();
    let c = if data > 0.0 { ns.l1_delta(&rep.u) / data } else { 0.0 };
    rep.notes.push(format!("norm constant ‖u‖_L¹(δ)/(∫δd|λ| + |ζ|(∂D)) = {c:.6e}"));
    let lin = ProblemSpec { f: Nonlinearity::new(Profile::Zero, 0.0)?, ..ps.clone() };
    let u = rep.u.clone();
    record(model, &lin, &mut rep, &u);
    rep.converged = true;
    rep.classification = Classification::Convergent;
    Ok(rep)
}

/// Largest m with m·G_φ(ρΛ(2P_φζ)) ≤ P_φζ at every node, for f = m·profile.
pub fn certify_monotone(model: &dyn NodeModel, f: &Nonlinearity, zeta: &[f64]) -> f64 {
    let p = model.poisson(zeta);
    let env: Vec<f64> = p.iter().map(|&v| f.rho * f.envelope.eval(2.0 * v)).collect();
    let g = model.green(&env);
    p.iter().zip(&g).filter(|(_, b)| **b > 0.0).map(|(a, b)| a / b).fold(f64::INFINITY, f64::min)
}

/// Monotone iteration u₀ = 0, uₙ = G_φf_{uₙ₋₁} + P_φζ for f ≥ 0 nondecreasing.
pub fn solve_monotone(model: &dyn NodeModel, ps: &ProblemSpec) -> Result<SolveReport> {
    let ns = model.node_set();
    check_data(ns, ps)?;
    if !(ps.f.flags.nonnegative && ps.f.flags.nondecreasing) {
        return Err(PhidError::Invalid("monotone solver needs f ≥ 0 nondecreasing in t".into()));
    }
    if ps.zeta.iter().any(|&z| z < 0.0) {
        return Err(PhidError::Invalid("monotone solver needs ζ ≥ 0".into()));
    }
    let p = model.poisson(&ps.zeta);
    let env: Vec<f64> = p.iter().map(|&v| ps.f.m * ps.f.rho * ps.f.envelope.eval(2.0 * v)).collect();
    let g = model.green(&env);
    let bad: Vec<usize> = (0..p.len()).filter(|&i| g[i] > p[i] * (1.0 + 1e-12)).collect();
    if !bad.is_empty() {
        return Err(PhidError::Precondition {
            msg: "G_φ(ρΛ(2P_φζ)) ≤ P_φζ fails".into(),
            nodes: bad,
        });
    }
    let mut rep = SolveReport::new(p.clone());
    rep.certificate = Some(ps.f.m);
    // u₁ = P_φζ; afterwards uₙ − uₙ₋₁ = G_φ(f_{uₙ₋₁} − f_{uₙ₋₂})
    let mut u = p.clone();
    let mut f_prev = vec![0.0; u.len()];
    rep.min_increment.push(p.iter().cloned().fold(f64::INFINITY, f64::min));
    for n in 1..=ps.controls.max_iter {
        let r = record(model, ps, &mut rep, &u);
        rep.iterations = n;
        if done(ps, r) {
            rep.converged = true;
            break;
        }
        let f_now = ps.f.apply(&u);
        let inc = model.green(&sub(&f_now, &f_prev));
        let lo = inc.iter().cloned().fold(f64::INFINITY, f64::min);
        rep.min_increment.push(lo);
        if lo < -1e-12 {
            return Err(PhidError::Consistency(format!("monotone iterate decreased by {lo:e} at step {n}")));
        }
        u = add(&u, &inc);
        f_prev = f_now;
        if let Some(i) = (0..u.len()).find(|&i| u[i] > 2.0 * p[i] * (1.0 + 1e-12)) {
            return Err(PhidError::Consistency(format!("iterate exceeds 2P_φζ at node {i} in step {n}")));
        }
    }
    rep.classification = if rep.converged { Classification::Convergent } else { Classification::Inconclusive };
    rep.u = u;
    Ok(rep)
}

/// θ-damped Picard iteration with halving on residual increase, θ ≥ 1/64;
/// divergence after 10 increases at the floor.
fn damped(model: &dyn NodeModel, ps: &ProblemSpec, mut u: Vec<f64>, rep: &mut SolveReport, map: &dyn Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let mut theta = ps.controls.theta;
    let mut strikes = 0;
    let mut last = f64::INFINITY;
    for n in 1..=ps.controls.max_iter {
        rep.iterations = n;
        let r = record(model, ps, rep, &u);
        if done(ps, r) {
            rep.converged = true;
            rep.classification = Classification::Convergent;
            return u;
        }
        if !r.0.is_finite() {
            rep.classification = Classification::Divergent;
            rep.notes.push(format!("non-finite residual at step {n}"));
            return u;
        }
        if r.0 > last {
            if theta <= 1.0 / 64.0 {
                strikes += 1;
                if strikes >= 10 {
                    rep.classification = Classification::Divergent;
                    rep.notes.push("residual increases at the damping floor".into());
                    return u;
                }
            }
            theta = (theta * 0.5).max(1.0 / 64.0);
        }
        last = r.0;
        let t = map(&u);
        u = u.iter().zip(&t).map(|(a, b)| (1.0 - theta) * a + theta * b).collect();
    }
    rep.notes.push("maximum iterations reached".into());
    u
}

/// f ≤ 0 with f(·,0) = 0 and ζ ≥ 0.  Nonincreasing f: alternating bracket,
/// otherwise damped iteration.
pub fn solve_nonpositive(model: &dyn NodeModel, ps: &ProblemSpec) -> Result<SolveReport> {
    let ns = model.node_set();
    check_data(ns, ps)?;
    if !ps.f.flags.nonpositive || ps.f.eval(0.0) != 0.0 {
        return Err(PhidError::Invalid("nonpositive solver needs f ≤ 0 with f(·,0) = 0".into()));
    }
    if ps.zeta.iter().any(|&z| z < 0.0) {
        return Err(PhidError::Invalid("nonpositive solver needs ζ ≥ 0".into()));
    }
    let p = model.poisson(&ps.zeta);
    let pf = ps.f.apply(&p);
    if !ns.l1_delta(&pf).is_finite() {
        return Err(PhidError::Invalid("ρΛ(P_φζ) is not δ-integrable".into()));
    }
    let map = |u: &[f64]| add(&model.green(&ps.f.apply(u)), &p);
    let start = match ps.controls.start {
        Start::Zero => vec![0.0; p.len()],
        Start::Poisson => p.clone(),
    };
    let mut rep = SolveReport::new(start.clone());
    if !ps.f.flags.nonincreasing {
        let u = damped(model, ps, start, &mut rep, &map);
        rep.u = u;
        return Ok(rep);
    }
    let sup = |a: &[f64], b: &[f64]| ns.sup_interior(&sub(a, b));
    let mut prev = start;
    let mut u = map(&prev);
    let mut best = f64::INFINITY;
    let mut stall = 0;
    for n in 1..=ps.controls.max_iter {
        rep.iterations = n;
        let width = sup(&u, &prev);
        rep.bracket_width.push(width);
        // the map is order-reversing: consecutive iterates straddle the solution
        let (lo, hi) = if n % 2 == 1 { (&u, &prev) } else { (&prev, &u) };
        let (lo, hi) = if ps.controls.start == Start::Zero { (hi, lo) } else { (lo, hi) };
        let inverted = (0..lo.len()).filter(|&i| lo[i] > hi[i] + 1e-9 * hi[i].abs().max(1.0)).count();
        if inverted > 0 {
            return Err(PhidError::Consistency(format!("bracket inverted at {inverted} nodes in step {n}")));
        }
        if width <= ps.controls.tol_sup {
            let mid: Vec<f64> = lo.iter().zip(hi.iter()).map(|(a, b)| 0.5 * (a + b)).collect();
            let r = record(model, ps, &mut rep, &mid);
            rep.u = mid;
            rep.converged = true;
            rep.classification = Classification::Convergent;
            if r.1 > ps.controls.tol_l1 {
                rep.notes.push(format!("δ-weighted residual {:.3e} above tolerance", r.1));
            }
            break;
        }
        if width < 0.999 * best {
            best = width;
            stall = 0;
        } else {
            stall += 1;
        }
        if stall >= 25 {
            rep.notes.push(format!("bracket stalled at width {width:.3e}"));
            rep.u = lo.clone();
            rep.upper = Some(hi.clone());
            rep.classification = Classification::Divergent;
            record(model, ps, &mut rep, &hi.clone());
            break;
        }
        prev = std::mem::replace(&mut u, Vec::new());
        u = map(&prev);
    }
    if !rep.converged && rep.upper.is_none() {
        rep.u = u.clone();
        rep.upper = Some(if u.iter().sum::<f64>() >= prev.iter().sum::<f64>() { u } else { prev });
        rep.classification = Classification::Divergent;
        rep.notes.push("maximum iterations reached".into());
    }
    if rep.converged {
        let bad = rep.u.iter().zip(&p).filter(|(a, b)| **a < -1e-12 || **a > **b * (1.0 + 1e-9) + 1e-12).count();
        if bad > 0 {
            return Err(PhidError::Consistency(format!("0 ≤ u ≤ P_φζ fails at {bad} nodes")));
        }
    }
    Ok(rep)
}

/// Scalar search for C with m(r_ρΛ(2C) + r_ζ) ≤ C over seeded log-uniform
/// candidates in [1e−6, 1e6]; returns the smallest admissible C and the
/// trace of tried values.
pub fn certificate_search(model: &dyn NodeModel, f: &Nonlinearity, zeta: &[f64], seed: u64) -> (Option<f64>, Vec<(f64, bool)>) {
    let ns = model.node_set();
    let r_rho = model.green(&vec![f.rho; ns.len()]).iter().cloned().fold(0.0, f64::max);
    let pabs = model.poisson(&zeta.iter().map(|z| z.abs()).collect::<Vec<_>>());
    let env: Vec<f64> = pabs.iter().map(|&v| f.rho * f.envelope.eval(2.0 * v)).collect();
    let r_zeta = model.green(&env).iter().cloned().fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cands: Vec<f64> = (0..256).map(|_| 10f64.powf(rng.gen_range(-6.0..6.0))).collect();
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut trace = Vec::with_capacity(cands.len());
    let mut found = None;
    for c in cands {
        let ok = f.m * (r_rho * f.envelope.eval(2.0 * c) + r_zeta) <= c;
        trace.push((c, ok));
        if ok && found.is_none() {
            found = Some(c);
        }
    }
    (found, trace)
}

/// Signed datum: Picard iteration on v = G_φ f(·, v + P_φζ), u = v + P_φζ.
pub fn solve_signed(model: &dyn NodeModel, ps: &ProblemSpec, seed: u64) -> Result<SolveReport> {
    let ns = model.node_set();
    check_data(ns, ps)?;
    let (cert, trace) = certificate_search(model, &ps.f, &ps.zeta, seed);
    let c = match cert {
        Some(c) => c,
        None if ps.f.flags.sublinear => {
            return Err(PhidError::Precondition {
                msg: format!("sublinear Λ but no C in the searched range ({} candidates)", trace.len()),
                nodes: vec![],
            })
        }
        None => {
            return Err(PhidError::Precondition {
                msg: format!("no admissible C among {} seeded candidates", trace.len()),
                nodes: vec![],
            })
        }
    };
    let p = model.poisson(&ps.zeta);
    let map = |v: &[f64]| model.green(&ps.f.apply(&add(v, &p)));
    // residual is measured on u, so the damped loop runs on u directly
    let map_u = |u: &[f64]| add(&map(&sub(u, &p)), &p);
    let mut rep = SolveReport::new(p.clone());
    rep.certificate = Some(c);
    let u = damped(model, ps, p.clone(), &mut rep, &map_u);
    let pabs = model.poisson(&ps.zeta.iter().map(|z| z.abs()).collect::<Vec<_>>());
    let bad = (0..u.len()).filter(|&i| u[i].abs() > c + pabs[i] + 1e-9).count();
    if bad > 0 {
        return Err(PhidError::Consistency(format!("|u| ≤ C + P_φ|ζ| fails at {bad} nodes")));
    }
    rep.u = u;
    Ok(rep)
}

/// Sub/supersolution method with G_φh_lo ≤ G_φh_hi; the nonlinearity is
/// evaluated at arguments clamped to the bracket.
pub fn bracket_solve(model: &dyn NodeModel, ps: &ProblemSpec, h_lo: &[f64], h_hi: &[f64]) -> Result<SolveReport> {
    let ns = model.node_set();
    check_data(ns, ps)?;
    let p = model.poisson(&ps.zeta);
    let lo = add(&model.green(h_lo), &p);
    let hi = add(&model.green(h_hi), &p);
    let mut bad: Vec<usize> = (0..lo.len()).filter(|&i| lo[i] > hi[i] + 1e-12).collect();
    let f_lo = ps.f.apply(&lo);
    let f_hi = ps.f.apply(&hi);
    bad.extend((0..lo.len()).filter(|&i| h_lo[i] > f_lo[i] + 1e-12 || f_hi[i] > h_hi[i] + 1e-12));
    bad.sort_unstable();
    bad.dedup();
    if !bad.is_empty() {
        return Err(PhidError::Precondition { msg: "sub/supersolution certificate fails".into(), nodes: bad });
    }
    let clamp = |u: &[f64]| -> Vec<f64> { (0..u.len()).map(|i| u[i].clamp(lo[i], hi[i])).collect() };
    let map = |u: &[f64]| clamp(&add(&model.green(&ps.f.apply(&clamp(u))), &p));
    let mut rep = SolveReport::new(lo.clone());
    let u = damped(model, ps, lo.clone(), &mut rep, &map);
    rep.u = u;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KatoReport {
    pub sup_w: f64,
    /// max (w⁺ − G_φ[1_{w>0}h])
    pub defect_positive: f64,
    /// max (w⁺ − G_φ[1_{w≥0}h])
    pub defect_nonnegative: f64,
    pub pass: bool,
}

/// Kato's inequality for w = G_φh.
pub fn verify_kato(model: &dyn NodeModel, h: &[f64], tol: f64) -> KatoReport {
    let w = model.green(h);
    let sup_w = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let defect = |keep: &dyn Fn(f64) -> bool| {
        let hk: Vec<f64> = w.iter().zip(h).map(|(wv, hv)| if keep(*wv) { *hv } else { 0.0 }).collect();
        let g = model.green(&hk);
        w.iter().zip(&g).map(|(a, b)| a.max(0.0) - b).fold(f64::NEG_INFINITY, f64::max)
    };
    let dp = defect(&|v| v > 0.0);
    let dn = defect(&|v| v >= 0.0);
    KatoReport { sup_w, defect_positive: dp, defect_nonnegative: dn, pass: dp <= tol * sup_w && dn <= tol * sup_w }
}

/// Ten tensor polynomial × bump test functions with a fixed seed, on nodes.
pub fn test_family(ns: &NodeSet, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..10)
        .map(|_| {
            let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let centre = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            ns.nodes
                .iter()
                .map(|x| {
                    let r2 = ((x[0] - centre[0]).powi(2) + (x[1] - centre[1]).powi(2)) / (radius * radius);
                    if r2 >= 1.0 {
                        return 0.0;
                    }
                    let poly = 2.0 + c[0] * x[0] + c[1] * x[1] + c[2] * x[0] * x[1] + c[3] * x[0] * x[0] + c[4] * x[1] * x[1] + c[5];
                    poly.abs() * (-1.0 / (1.0 - r2)).exp()
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubsolutionReport {
    /// max over test functions of (lhs − rhs)/scale
    pub max_violation: f64,
    pub pass: bool,
}

/// ∫w·φ(−Δ)ψ ≤ ∫f(·,w)ψ + ∫P_φζ·φ(−Δ)ψ for w = max{u, v}.
pub fn verify_max_subsolution(model: &dyn NodeModel, u: &[f64], v: &[f64], ps: &ProblemSpec, tol: f64) -> SubsolutionReport {
    let ns = model.node_set();
    let w: Vec<f64> = u.iter().zip(v).map(|(a, b)| a.max(*b)).collect();
    let fw = ps.f.apply(&w);
    let p = model.poisson(&ps.zeta);
    let mut worst = f64::NEG_INFINITY;
    for psi in test_family(ns, 0.5, 11) {
        let lpsi = model.apply(&psi);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(&ns.weights).map(|((x, y), m)| x * y * m).sum::<f64>();
        let lhs = dot(&w, &lpsi);
        let rhs = dot(&fw, &psi) + dot(&p, &lpsi);
        let scale = lhs.abs().max(rhs.abs()).max(1e-300);
        worst = worst.max((lhs - rhs) / scale);
    }
    SubsolutionReport { max_violation: worst, pass: worst <= tol }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Absorption,
    Source,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub p: f64,
    pub mechanism: Mechanism,
    pub labels: Vec<String>,
    /// ∫|f_u|δ per refinement level
    pub norms: Vec<f64>,
    pub growth: Vec<f64>,
    pub residuals: Vec<f64>,
    pub classification: Classification,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub s: Option<f64>,
    /// 1/(1 − s) and s/(1 − s)
    pub thresholds: Option<(f64, f64)>,
    pub rows: Vec<ThresholdRow>,
}

fn classify(norms: &[f64], converged: &[bool], blew_up: bool) -> (Vec<f64>, Classification) {
    let growth: Vec<f64> = norms.windows(2).map(|w| w[1] / w[0]).collect();
    let c = if blew_up || (!growth.is_empty() && growth.iter().all(|&g| g >= 2.0)) {
        Classification::Divergent
    } else if converged.iter().all(|&c| c) && growth.iter().all(|&g| (g - 1.0).abs() <= 0.1) {
        Classification::Convergent
    } else {
        Classification::Inconclusive
    };
    (growth, c)
}

/// For each p: f = −(t⁺)^p through the bracket solver and f = m(t⁺)^p
/// through monotone iteration (m certified on the coarsest level), across
/// the refinement family, classified by the growth of ∫|f_u|δ.
pub fn threshold_experiment(models: &[&dyn NodeModel], p_list: &[f64], zeta: &dyn Fn(&NodeSet) -> Vec<f64>) -> Result<ThresholdTable> {
    let s = models.first().and_then(|m| m.phi().stable_index());
    let mut rows = Vec::new();
    for &p in p_list {
        let f = Nonlinearity::new(Profile::Absorption { p }, 1.0)?;
        let (mut norms, mut conv, mut res, mut labels) = (vec![], vec![], vec![], vec![]);
        for m in models {
            let ns = m.node_set();
            let mut ps = ProblemSpec::new(f.clone(), zeta(ns));
            ps.controls.max_iter = 400;
            let rep = solve_nonpositive(*m, &ps)?;
            let u = rep.upper.clone().unwrap_or(rep.u.clone());
            norms.push(ns.l1_delta(&f.apply(&u)));
            conv.push(rep.converged);
            res.push(*rep.residual_sup.last().unwrap_or(&f64::NAN));
            labels.push(m.label());
        }
        let (growth, classification) = classify(&norms, &conv, false);
        rows.push(ThresholdRow { p, mechanism: Mechanism::Absorption, labels: labels.clone(), norms, growth, residuals: res, classification });

        let probe = Nonlinearity::new(Profile::Power { p }, 1.0)?;
        let m0 = certify_monotone(models[0], &probe, &zeta(models[0].node_set()));
        let f = Nonlinearity::new(Profile::Power { p }, 0.5 * m0)?;
        let (mut norms, mut conv, mut res) = (vec![], vec![], vec![]);
        let mut blew_up = false;
        for m in models {
            let ns = m.node_set();
            let ps = ProblemSpec::new(f.clone(), zeta(ns));
            match solve_monotone(*m, &ps) {
                Ok(rep) => {
                    norms.push(ns.l1_delta(&f.apply(&rep.u)));
                    conv.push(rep.converged);
                    res.push(*rep.residual_sup.last().unwrap_or(&f64::NAN));
                }
                Err(PhidError::Precondition { .. }) | Err(PhidError::Consistency(_)) => {
                    // uncertified on this level: the candidate keeping P_φζ
                    let u = m.poisson(&ps.zeta);
                    norms.push(ns.l1_delta(&f.apply(&u)));
                    conv.push(false);
                    res.push(f64::NAN);
                    blew_up = true;
                }
                Err(e) => return Err(e),
            }
        }
        let (growth, classification) = classify(&norms, &conv, blew_up);
        rows.push(ThresholdRow { p, mechanism: Mechanism::Source, labels, norms, growth, residuals: res, classification });
    }
    Ok(ThresholdTable { s, thresholds: s.map(|s| (1.0 / (1.0 - s), s / (1.0 - s))), rows })
}
