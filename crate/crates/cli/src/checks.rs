//! The check registry: one function per acceptance criterion, looked up by
//! name from catalog entries.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phid::bernstein::{log_grid, verify_wsc, BernsteinSpec};
use phid::geometry::{dist, DomainGeometry, Point};
use phid::kernels::{green_apply_nodes, stratified_sample, Potential, Route, SigmaRoute};
use phid::mc::{
    estimate_green_potential, poisson_kernel_fn, spectral_reference, verify_mean_value, Ball, Integrand, OracleRow,
    PathConfig,
};
use phid::model::{NodeModel, NodeSet, PolarFvModel};
use phid::potentials::{
    green_potential, pointwise_boundary_ratio, poisson_integral, u_profile_bound, weak_boundary_trace, BoundaryMeasure,
    InteriorMeasure, ProfileQuadrature, UKind, UProfile,
};
use phid::solvers::{
    certify_monotone, solve_linear, solve_monotone, solve_nonpositive, solve_signed, threshold_experiment, verify_kato,
    Classification, Mechanism, Nonlinearity, ProblemSpec, Profile, Start,
};
use phid::{PhidError, Result};

use crate::config::ExperimentConfig;
use crate::context::Context;
use crate::report::{Check, Dataset, Status};
use crate::specs::DomainSpec;

type CheckFn = fn(&mut Context, &ExperimentConfig, Check) -> Result<Check>;

pub fn registry(name: &str) -> Option<CheckFn> {
    let f: CheckFn = match name {
        "C1" => spectral_inversion,
        "C2" => two_route_green,
        "C3" => factorization,
        "C4" => killing_identity,
        "C5" => sharp_bands,
        "C6" => blowup_slope,
        "C7" => u_profile,
        "C8" => poisson_trace,
        "C9" => green_trace,
        "C10" => kato_suite,
        "C11" => monotone_solver,
        "C12" => nonpositive_solver,
        "C13" => thresholds,
        "C14" => signed_solver,
        "C15" => mc_oracle,
        "C16" => maximum_principle,
        "C17" => wsc_estimation,
        _ => return None,
    };
    Some(f)
}

fn domain(cfg: &ExperimentConfig) -> Result<DomainSpec> {
    cfg.domain_spec()
}

/// `count` seeded pairs with |x − y| ≥ sep and δ ≥ min_delta at both ends.
pub fn interior_pairs(g: &DomainGeometry, count: usize, sep: f64, min_delta: f64, seed: u64) -> Vec<(Point, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = g.diam;
    let centre = g.nodes.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
    let centre = [centre[0] / g.nodes.len() as f64, centre[1] / g.nodes.len() as f64];
    let draw = |rng: &mut ChaCha8Rng| loop {
        let p = [
            centre[0] + r * rng.gen_range(-0.5..0.5),
            if g.dim == 1 { 0.0 } else { centre[1] + r * rng.gen_range(-0.5..0.5) },
        ];
        if g.contains(p) && g.delta_at(p) >= min_delta {
            return p;
        }
    };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        if dist(x, y) >= sep {
            out.push((x, y));
        }
    }
    out
}

/// Least-squares slope of ys against xs.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn stable(s: f64) -> Result<BernsteinSpec> {
    BernsteinSpec::stable(s)
}

fn spectral_inversion(ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let tol = cfg.tol("C1.sup_defect", 1e-8);
    let d = domain(cfg)?;
    let mut worst: f64 = 0.0;
    for &s in &cfg.params.s_values {
        let ks = ctx.kernels(&d, cfg.n_modes, &stable(s)?)?;
        let sp = &ks.spectrum;
        let mut w: f64 = 0.0;
        for j in 0..20.min(sp.len()) {
            let g = green_apply_nodes(&ks, Potential::Phi, &sp.node_values[j]);
            for (gi, fj) in g.iter().zip(&sp.node_values[j]) {
                w = w.max((gi - fj / ks.phi_l[j]).abs());
            }
        }
        c.measure(&format!("sup_defect_s{s}"), w);
        worst = worst.max(w);
    }
    c.measure("sup_defect", worst).tolerance("sup_defect", tol);
    c.status = Status::from_bool(worst <= tol);
    Ok(c)
}

fn two_route_green(ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let tol = cfg.tol("C2.relative", 1e-3);
    let ks = ctx.kernels(&domain(cfg)?, cfg.n_modes, &cfg.phi_spec()?)?;
    let pairs = interior_pairs(&ks.spectrum.geom, cfg.params.pairs, 0.2, 0.2, cfg.seed);
    let mut ds = Dataset::new("routes", &["x0", "x1", "y0", "y1", "spectral", "subordination", "relative"]);
    let mut worst: f64 = 0.0;
    for &(x, y) in &pairs {
        let a = ks.green_phi(x, y, Route::Spectral)?;
        let b = ks.green_phi(x, y, Route::Subordination)?;
        let r = (a - b).abs() / b.abs();
        worst = worst.max(r);
        ds.push(vec![x[0], x[1], y[0], y[1], a, b, r]);
    }
    c.measure("max_relative", worst).tolerance("max_relative", tol);
    c.datasets.push(ds);
    c.status = Status::from_bool(worst <= tol);
    Ok(c)
}

fn factorization(ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let tol_mode = cfg.tol("C3.mode_defect", 1e-12);
    let tol_kernel = cfg.tol("C3.kernel_relative", 2e-2);
    let ks = ctx.kernels(&domain(cfg)?, cfg.n_modes, &cfg.phi_spec()?)?;
    let pairs = interior_pairs(&ks.spectrum.geom, cfg.params.pairs, 0.2, 0.2, cfg.seed.wrapping_add(1));
    let rep = ks.verify_factorization(&pairs)?;
    let mut ds = Dataset::new("factorization", &["x0", "x1", "y0", "y1", "quadrature", "reference", "relative"]);
    for r in &rep.rows {
        ds.push(vec![r.x[0], r.x[1], r.y[0], r.y[1], r.quadrature, r.reference, r.relative]);
    }
    c.measure("mode_defect", rep.mode_defect)
        .measure("kernel_relative", rep.max_relative)
        .tolerance("mode_defect", tol_mode)
        .tolerance("kernel_relative", tol_kernel);
    c.datasets.push(ds);
    c.status = Status::from_bool(rep.mode_defect <= tol_mode && rep.max_relative <= tol_kernel);
    Ok(c)
}

fn killing_identity(ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let tol = cfg.tol("C4.relative", 1e-2);
    let d = domain(cfg)?;
    let mut worst: f64 = 0.0;
    for &s in &cfg.params.s_values {
        let ks = ctx.kernels(&d, cfg.n_modes, &stable(s)?)?;
        let sp = &ks.spectrum;
        let g = &sp.geom;
        let mut lhs = 0.0;
        for (x, w, delta) in g.graded_rule(1.0 / 16.0, 8) {
            if delta <= 1e-15 {
                continue;
            }
            lhs += w * ks.killing_function(x)? * sp.eval(0, x);
        }
        let int_phi1: f64 = sp.node_values[0].iter().zip(&g.weights).map(|(v, w)| v * w).sum();
        let rhs = ks.phi_l[0] * int_phi1;
        let rel = (lhs - rhs).abs() / rhs.abs();
        c.measure(&format!("relative_s{s}"), rel);
        worst = worst.max(rel);
    }
    c.measure("relative", worst).tolerance("relative", tol);
    c.status = Status::from_bool(worst <= tol);
    Ok(c)
}

fn sharp_bands(ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let ceilings = [cfg.tol("C5.green_band", 20.0), cfg.tol("C5.poisson_band", 20.0), cfg.tol("C5.jump_band", 30.0)];
    let drift_tol = cfg.tol("C5.band_drift", 0.2);
    let d = domain(cfg)?;
    let phi = cfg.phi_spec()?;
    let coarse = ctx.kernels(&d, cfg.n_modes, &phi)?;
    let fine = ctx.kernels(&d, cfg.params.n_modes_refined, &phi)?;
    let floor = 2.0 * coarse.spectrum.geom.spacing;
    let sample = stratified_sample(&coarse, cfg.params.per_stratum, floor, cfg.seed);
    let a = coarse.verify_sharp_bounds(&sample, ceilings)?;
    let b = fine.verify_sharp_bounds(&sample, ceilings)?;
    let mut ok = true;
    let mut ds = Dataset::new("bands", &["kernel", "n_modes", "min_ratio", "max_ratio", "band"]);
    for (k, (ra, rb)) in a.iter().zip(&b).enumerate() {
        let drift = (rb.band() / ra.band() - 1.0).abs();
        c.measure(&format!("{}_band", ra.kernel), ra.band())
            .measure(&format!("{}_band_refined", ra.kernel), rb.band())
            .measure(&format!("{}_drift", ra.kernel), drift)
            .tolerance(&format!("{}_band", ra.kernel), ceilings[k]);
        ok &= ra.pass && rb.pass && drift <= drift_tol;
        ds.push(vec![k as f64, cfg.n_modes as f64, ra.min_ratio, ra.max_ratio, ra.band()]);
        ds.push(vec![k as f64, cfg.params.n_modes_refined as f64, rb.min_ratio, rb.max_ratio, rb.band()]);
    }
    c.measure("excluded_fraction", sample.excluded_fraction).measure("floor", floor).tolerance("band_drift", drift_tol);
    c.note("kernel index: 0 green_phi, 1 poisson_phi, 2 jump");
    c.datasets.push(ds);
    c.status = Status::from_bool(ok);
    Ok(c)
}

fn blowup_slope(ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let tol = cfg.tol("C6.slope", 0.15);
    let d = domain(cfg)?;
    let mut ok = true;
    let mut ds = Dataset::new("slope", &["s", "delta", "p_sigma"]);
    for &s in &cfg.params.s_values {
        let ks = ctx.kernels(&d, cfg.n_modes, &stable(s)?)?;
        let g = &ks.spectrum.geom;
        let z = g.boundary[0];
        let ray = g.normal_ray(&z, cfg.params.slope_ray_points, cfg.params.slope_ray_floor);
        let (mut lx, mut ly) = (vec![], vec![]);
        for &x in &ray {
            let p = ks.poisson_sigma(x, SigmaRoute::Survival)?;
            let delta = g.delta_at(x);
            ds.push(vec![s, delta, p]);
            lx.push(delta.ln());
            ly.push(p.ln());
        }
        let slope = fit_slope(&lx, &ly);
        let target = -(2.0 - 2.0 * s);
        c.measure(&format!("slope_s{s}"), slope).measure(&format!("target_s{s}"), target);
        ok &= (slope - target).abs() <= tol;
    }
    c.tolerance("slope", tol);
    c.datasets.push(ds);
    c.status = Status::from_bool(ok);
    Ok(c)
}

fn u_profile(ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let band_tol = cfg.tol("C7.band", 30.0);
    let decay_tol = cfg.tol("C7.decay", 0.05);
    let ks = ctx.kernels(&domain(cfg)?, cfg.n_modes, &cfg.phi_spec()?)?;
    let g = &ks.spectrum.geom;
    let z = g.boundary[0];
    let ray = g.normal_ray(&z, cfg.params.profile_ray_points, cfg.params.profile_ray_floor);
    let d_ref = g.inradius / 3.0;
    let x_ref = [z.z[0] + d_ref * z.normal[0], z.z[1] + d_ref * z.normal[1]];
    let q = ProfileQuadrature { n_angular: cfg.params.profile_angles, ..Default::default() };
    let decades = (g.delta_at(ray[0]) / g.delta_at(*ray.last().unwrap())).log10();
    c.measure("decades", decades);
    let mut ok = decades >= 3.0 - 1e-9;
    let mut ds = Dataset::new("profile", &["beta", "delta", "lhs", "rhs", "ratio", "lhs_over_p_sigma"]);
    for (label, kind, beta) in [
        ("one", UKind::Bounded { c: 1.0 }, 0.0),
        ("t-0.5", UKind::Power { beta: 0.5 }, 0.5),
        ("t-1.4", UKind::Power { beta: 1.4 }, 1.4),
    ] {
        let prof = UProfile::new(kind)?;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let mut last = f64::NAN;
        for &x in &ray {
            let b = u_profile_bound(&ks, &prof, x, q)?;
            let ps = ks.poisson_sigma(x, SigmaRoute::Survival)?;
            lo = lo.min(b.ratio);
            hi = hi.max(b.ratio);
            last = b.lhs / ps;
            ds.push(vec![beta, b.delta, b.lhs, b.rhs, b.ratio, last]);
        }
        let r = u_profile_bound(&ks, &prof, x_ref, q)?;
        let at_ref = r.lhs / ks.poisson_sigma(x_ref, SigmaRoute::Survival)?;
        let band = hi / lo;
        let decay = last / at_ref;
        c.measure(&format!("band_{label}"), band).measure(&format!("decay_{label}"), decay);
        ok &= lo > 0.0 && band <= band_tol && decay <= decay_tol;
    }
    c.tolerance("band", band_tol).tolerance("decay", decay_tol);
    c.datasets.push(ds);
    c.status = Status::from_bool(ok);
    Ok(c)
}

/// Limit of trace(t) from its last two values, assuming trace(t) = L + a·t.
fn linear_limit(ts: &[f64], vs: &[f64]) -> f64 {
    let n = ts.len();
    if n < 2 {
        return vs[n - 1];
    }
    let (t1, t2, v1, v2) = (ts[n - 2], ts[n - 1], vs[n - 2], vs[n - 1]);
    (t1 * v2 - t2 * v1) / (t1 - t2)
}

fn poisson_trace(ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let tol = cfg.tol("C8.relative", 0.05);
    let ks = ctx.kernels(&domain(cfg)?, cfg.n_modes, &cfg.phi_spec()?)?;
    let g = &ks.spectrum.geom;
    if !matches!(g.shape, phid::geometry::Shape::Disk) {
        return Err(PhidError::Unsupported("the Poisson trace check is set on the disk".into()));
    }
    let zeta = BoundaryMeasure::from_fn(g, |b| 2.0 + b.z[0]);
    let pz = poisson_integral(&ks, &zeta)?;
    let u = |x: Point| pz.at(&ks, x);
    let z = g.boundary[0];
    let ray = g.normal_ray(&z, cfg.params.profile_ray_points, cfg.params.profile_ray_floor);
    let seq = pointwise_boundary_ratio(&ks, &u, z.z, &ray, 0.0)?;
    let target = 2.0 + z.z[0];
    let last = seq.last_ratio().unwrap_or(f64::NAN);
    let pointwise = (last - target).abs() / target;
    c.measure("pointwise_ratio", last).measure("pointwise_relative", pointwise);
    let mut ok = pointwise <= tol;
    let mut ds = Dataset::new("ratio", &["delta", "ratio"]);
    for p in &seq.points {
        ds.push(vec![p.delta, p.ratio]);
    }
    c.datasets.push(ds);
    let tests: [(&str, fn(Point) -> f64, f64); 3] = [
        ("one", |_| 1.0, 4.0 * PI),
        ("x", |x| x[0], PI),
        ("one_plus_y2", |x| 1.0 + x[1] * x[1], 6.0 * PI),
    ];
    let mut tr = Dataset::new("trace", &["test", "t", "trace", "reference"]);
    for (k, (name, f, reference)) in tests.iter().enumerate() {
        let mut vals = vec![];
        for &t in &cfg.params.trace_widths {
            let r = weak_boundary_trace(&ks, &u, t, f)?;
            if let Some(w) = r.warning {
                c.note(w);
            }
            tr.push(vec![k as f64, t, r.value, *reference]);
            vals.push(r.value);
        }
        let limit = linear_limit(&cfg.params.trace_widths, &vals);
        let rel = (limit - reference).abs() / reference.abs();
        c.measure(&format!("trace_{name}_final"), *vals.last().unwrap())
            .measure(&format!("trace_{name}_limit"), limit)
            .measure(&format!("trace_{name}_relative"), rel);
        ok &= rel <= tol;
    }
    c.note("trace limit extrapolated linearly in t from the two narrowest collars");
    c.tolerance("relative", tol);
    c.datasets.push(tr);
    c.status = Status::from_bool(ok);
    Ok(c)
}

fn green_trace(ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let tol = cfg.tol("C9.fraction", 0.05);
    let ks = ctx.kernels(&domain(cfg)?, cfg.n_modes, &cfg.phi_spec()?)?;
    let g = &ks.spectrum.geom;
    let gp = green_potential(&ks, &InteriorMeasure::from_fn(g, |_| 1.0))?;
    let u = |x: Point| gp.at(&ks, x);
    let sigma = |x: Point| ks.poisson_sigma(x, SigmaRoute::Survival).unwrap_or(f64::NAN);
    let mut ds = Dataset::new("trace", &["t", "green_trace", "sigma_trace"]);
    let (mut last, mut reference) = (f64::NAN, f64::NAN);
    for &t in &cfg.params.trace_widths {
        last = weak_boundary_trace(&ks, &u, t, &|_| 1.0)?.value;
        reference = weak_boundary_trace(&ks, &sigma, t, &|_| 1.0)?.value;
        ds.push(vec![t, last, reference]);
    }
    let frac = last / reference;
    c.measure("final_trace", last).measure("sigma_reference", reference).measure("fraction", frac);
    c.measure("delta_norm_constant", gp.constant);
    c.tolerance("fraction", tol);
    c.datasets.push(ds);
    c.status = Status::from_bool(frac.abs() <= tol);
    Ok(c)
}

fn fv_model(cfg: &ExperimentConfig) -> Result<PolarFvModel> {
    PolarFvModel::new(&cfg.phi_spec()?, cfg.params.fv_radial, cfg.params.fv_angular, cfg.params.fv_grading)
}

fn kato_suite(ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let tol = cfg.tol("C10.defect", 1e-3);
    let m = fv_model(cfg)?;
    let ns = m.node_set().clone();
    let basis = ctx.spectrum(&DomainSpec::Disk, 30)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(10));
    let (mut worst_p, mut worst_n) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut ok = true;
    let mut sign_changing = 0;
    let mut drawn = 0;
    while sign_changing < cfg.params.kato_samples {
        drawn += 1;
        let coef: Vec<f64> = (0..basis.len()).map(|j| rng.gen_range(-1.0..1.0) / (1.0 + j as f64)).collect();
        let h: Vec<f64> = ns.nodes.iter().map(|&x| (0..basis.len()).map(|j| coef[j] * basis.eval(j, x)).sum()).collect();
        if !(h.iter().any(|v| *v > 0.0) && h.iter().any(|v| *v < 0.0)) {
            continue;
        }
        sign_changing += 1;
        let k = verify_kato(&m, &h, tol);
        worst_p = worst_p.max(k.defect_positive / k.sup_w);
        worst_n = worst_n.max(k.defect_nonnegative / k.sup_w);
        ok &= k.pass;
    }
    c.measure("defect_positive_over_sup", worst_p)
        .measure("defect_nonnegative_over_sup", worst_n)
        .measure("samples", sign_changing as f64)
        .measure("draws", drawn as f64)
        .tolerance("defect", tol);
    c.status = Status::from_bool(ok);
    Ok(c)
}

fn maximum_principle(_ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let m = fv_model(cfg)?;
    let ns = m.node_set().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(16));
    let mut violations = 0usize;
    let mut min_u = f64::INFINITY;
    for _ in 0..cfg.params.maxprinciple_samples {
        let bumps: Vec<(Point, f64, f64)> = (0..3)
            .map(|_| {
                let r = rng.gen_range(0.0..0.8f64).sqrt();
                let th = rng.gen_range(0.0..2.0 * PI);
                ([r * th.cos(), r * th.sin()], rng.gen_range(0.05..0.4), rng.gen_range(0.0..5.0))
            })
            .collect();
        let lambda: Vec<f64> = ns
            .nodes
            .iter()
            .map(|&x| {
                bumps
                    .iter()
                    .map(|&(cx, r, a)| {
                        let q = (dist(x, cx) / r).powi(2);
                        if q < 1.0 {
                            a * (1.0 - q).powi(2)
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect();
        let (a, b, k, ph) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0..6), rng.gen_range(0.0..2.0 * PI));
        let zeta = ns.boundary_values(|p| {
            let th = p.z[1].atan2(p.z[0]);
            a + b * (1.0 + (k as f64 * th + ph).cos())
        });
        let mut ps = ProblemSpec::new(Nonlinearity::new(Profile::Zero, 0.0)?, zeta);
        ps.lambda = Some(lambda);
        let rep = solve_linear(&m, &ps)?;
        violations += rep.u.iter().filter(|v| **v < 0.0).count();
        min_u = min_u.min(rep.u.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    c.measure("violations", violations as f64).measure("min_u", min_u).tolerance("violations", 0.0);
    c.status = Status::from_bool(violations == 0);
    Ok(c)
}

fn monotone_solver(_ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let tol_inc = cfg.tol("C11.increment", -1e-12);
    let tol_res = cfg.tol("C11.residual", 1e-8);
    let m = fv_model(cfg)?;
    let ns = m.node_set().clone();
    let sigma = vec![1.0; ns.boundary.len()];
    let probe = Nonlinearity::new(Profile::Power { p: 1.5 }, 1.0)?;
    let m_star = certify_monotone(&m, &probe, &sigma);
    let f = Nonlinearity::new(Profile::Power { p: 1.5 }, 0.5 * m_star)?;
    let mut ps = ProblemSpec::new(f, sigma);
    ps.controls.tol_sup = tol_res;
    let rep = solve_monotone(&m, &ps)?;
    let min_inc = rep.min_increment.iter().cloned().fold(f64::INFINITY, f64::min);
    let res = rep.residual_sup.last().copied().unwrap_or(f64::NAN);
    let p = m.poisson_sigma();
    let min_u = rep.u.iter().cloned().fold(f64::INFINITY, f64::min);
    let over = rep.u.iter().zip(p).map(|(u, p)| u - 2.0 * p).fold(f64::NEG_INFINITY, f64::max);
    c.measure("m_certified", m_star)
        .measure("m", 0.5 * m_star)
        .measure("iterations", rep.iterations as f64)
        .measure("residual", res)
        .measure("min_increment", min_inc)
        .measure("min_u", min_u)
        .measure("max_u_minus_2p", over)
        .tolerance("increment", tol_inc)
        .tolerance("residual", tol_res)
        .tolerance("iterations", 200.0);
    let mut hist = Dataset::new("residuals", &["iteration", "residual_sup", "residual_l1"]);
    for (k, (a, b)) in rep.residual_sup.iter().zip(&rep.residual_l1).enumerate() {
        hist.push(vec![k as f64, *a, *b]);
    }
    c.datasets.push(hist);
    c.status = Status::from_bool(
        rep.converged && rep.iterations <= 200 && res <= tol_res && min_inc >= tol_inc && min_u >= 0.0 && over <= 0.0,
    );
    Ok(c)
}

fn nonpositive_solver(_ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let tol_w = cfg.tol("C12.width", 1e-8);
    let tol_agree = cfg.tol("C12.agreement", 1e-6);
    let m = fv_model(cfg)?;
    let sigma = vec![1.0; m.node_set().boundary.len()];
    let mut ps = ProblemSpec::new(Nonlinearity::new(Profile::Absorption { p: 1.5 }, 1.0)?, sigma);
    ps.controls.max_iter = 400;
    ps.controls.start = Start::Poisson;
    let a = solve_nonpositive(&m, &ps)?;
    ps.controls.start = Start::Zero;
    let b = solve_nonpositive(&m, &ps)?;
    let width = a.bracket_width.last().copied().unwrap_or(f64::NAN).max(b.bracket_width.last().copied().unwrap_or(f64::NAN));
    let diff = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    c.measure("bracket_width", width)
        .measure("start_difference", diff)
        .measure("iterations_poisson_start", a.iterations as f64)
        .measure("iterations_zero_start", b.iterations as f64)
        .tolerance("width", tol_w)
        .tolerance("agreement", tol_agree);
    let mut hist = Dataset::new("bracket", &["iteration", "width"]);
    for (k, w) in a.bracket_width.iter().enumerate() {
        hist.push(vec![k as f64, *w]);
    }
    c.datasets.push(hist);
    c.status = Status::from_bool(a.converged && b.converged && width <= tol_w && diff <= tol_agree);
    Ok(c)
}

fn thresholds(_ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let growth_tol = cfg.tol("C13.growth", 2.0);
    let phi = cfg.phi_spec()?;
    let (nr, nt) = cfg.params.fv_coarse;
    let fam = PolarFvModel::family(&phi, nr, nt, cfg.params.fv_grading, cfg.params.fv_levels)?;
    let refs: Vec<&dyn NodeModel> = fam.iter().map(|m| m as &dyn NodeModel).collect();
    let tab = threshold_experiment(&refs, &[1.5, 2.5], &|ns: &NodeSet| vec![1.0; ns.boundary.len()])?;
    let mut ok = true;
    let mut ds = Dataset::new("threshold", &["p", "mechanism", "level", "norm"]);
    for r in &tab.rows {
        let mech = format!("{:?}", r.mechanism).to_lowercase();
        for (k, n) in r.norms.iter().enumerate() {
            ds.push(vec![r.p, if mech == "absorption" { 0.0 } else { 1.0 }, k as f64, *n]);
        }
        let min_growth = r.growth.iter().cloned().fold(f64::INFINITY, f64::min);
        c.measure(&format!("p{}_{mech}_min_growth", r.p), min_growth);
        c.note(format!("p = {} {mech}: {:?}", r.p, r.classification));
        // the criterion concerns the absorption problem f = −t^p; the
        // source rows are reported alongside
        if r.mechanism != Mechanism::Absorption {
            continue;
        }
        if r.p < 2.0 {
            ok &= r.classification == Classification::Convergent;
        } else {
            ok &= r.classification == Classification::Divergent && min_growth >= growth_tol && r.norms.len() >= 3;
        }
    }
    c.tolerance("growth", growth_tol);
    c.datasets.push(ds);
    c.status = Status::from_bool(ok);
    Ok(c)
}

fn signed_solver(_ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let m = fv_model(cfg)?;
    let ns = m.node_set().clone();
    let zeta = ns.boundary_values(|b| b.z[0]);
    let ps = ProblemSpec::new(Nonlinearity::new(Profile::Sine, 1.0)?, zeta.clone());
    let a = solve_signed(&m, &ps, cfg.seed)?;
    let b = solve_signed(&m, &ps, cfg.seed)?;
    let abs_zeta: Vec<f64> = zeta.iter().map(|v| v.abs()).collect();
    let p_abs = m.poisson(&abs_zeta);
    let cert = a.certificate.unwrap_or(f64::NAN);
    let excess = a.u.iter().zip(&p_abs).map(|(u, p)| u.abs() - cert - p).fold(f64::NEG_INFINITY, f64::max);
    let reproducible = a.certificate == b.certificate && a.u == b.u;
    c.measure("certificate", cert)
        .measure("iterations", a.iterations as f64)
        .measure("residual", a.residual_sup.last().copied().unwrap_or(f64::NAN))
        .measure("bound_excess", excess)
        .measure("reproducible", if reproducible { 1.0 } else { 0.0 });
    c.status = Status::from_bool(a.converged && cert.is_finite() && excess <= 0.0 && reproducible);
    Ok(c)
}

fn mc_oracle(ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let z_tol = cfg.tol("C15.z_score", 3.0);
    let phi = cfg.phi_spec()?;
    let ks = ctx.kernels(&domain(cfg)?, cfg.n_modes, &phi)?;
    let pc = PathConfig::for_spec(&phi, cfg.params.mc_paths, cfg.seed)?;
    let f = Integrand::Bump { center: [0.0, 0.0], radius: 0.6 };
    let mut ok = true;
    let mut ds = Dataset::new("oracle", &["x0", "x1", "estimate", "se", "reference", "z_score"]);
    let mut rows = vec![];
    for (k, &x) in cfg.params.mc_points.iter().enumerate() {
        let est = estimate_green_potential(&pc, &ks, x, &f)?;
        let row = OracleRow::new(x, f.id(), &est, spectral_reference(&ks, &f, x));
        c.measure(&format!("z_score_{k}"), row.z_score);
        ok &= row.z_score.abs() <= z_tol && est.truncated == 0;
        ds.push(vec![x[0], x[1], row.estimate, row.se, row.reference, row.z_score]);
        rows.push(row);
    }
    let zb = ks.spectrum.geom.boundary[0];
    let h = poisson_kernel_fn(&ks, zb)?;
    let mv = verify_mean_value(&pc, &ks, &h, Ball { center: [-0.2, 0.0], radius: 0.5 }, [-0.1, 0.1])?;
    let mv_z = mv.defect / mv.se;
    c.measure("mean_value_defect", mv.defect).measure("mean_value_se", mv.se).measure("mean_value_z", mv_z);
    ok &= mv_z <= z_tol;
    c.tolerance("z_score", z_tol).tolerance("paths", cfg.params.mc_paths as f64);
    c.note(serde_json::to_string(&rows)?);
    c.datasets.push(ds);
    c.status = Status::from_bool(ok);
    Ok(c)
}

fn wsc_estimation(_ctx: &mut Context, cfg: &ExperimentConfig, mut c: Check) -> Result<Check> {
    let tol = cfg.tol("C17.recovery", 0.05);
    let grid = log_grid(1.0, 1e6, 25);
    let mut ok = true;
    for &s in &cfg.params.s_values {
        let r = verify_wsc(&stable(s)?, &grid, &grid)?;
        let err = (r.delta1_hat - s).abs().max((r.delta2_hat - s).abs());
        c.measure(&format!("recovery_error_s{s}"), err);
        ok &= err <= tol && r.valid;
    }
    let comp = BernsteinSpec::stable_sum(&[(0.5, 0.3), (0.5, 0.7)])?;
    let r = verify_wsc(&comp, &grid, &grid)?;
    c.measure("composite_delta1", r.delta1_hat).measure("composite_delta2", r.delta2_hat);
    ok &= r.delta1_hat >= cfg.tol("C17.composite_delta1_min", 0.25) && r.delta2_hat <= cfg.tol("C17.composite_delta2_max", 0.75);
    c.tolerance("recovery", tol);
    c.status = Status::from_bool(ok);
    Ok(c)
}
