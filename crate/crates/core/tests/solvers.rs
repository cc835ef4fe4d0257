use std::f64::consts::PI;
use std::sync::Arc;

use phid::bernstein::BernsteinSpec;
use phid::geometry::DomainGeometry;
use phid::kernels::KernelSet;
use phid::model::{NodeModel, PolarFvModel, SpectralModel};
use phid::solvers::{
    bracket_solve, residual, solve_linear, solve_monotone, solve_nonpositive, solve_signed, verify_kato,
    verify_max_subsolution, Classification, Nonlinearity, ProblemSpec, Profile,
};
use phid::spectrum::{build_spectrum, disk_rule_for};

fn fv() -> PolarFvModel {
    PolarFvModel::new(&BernsteinSpec::stable(0.5).unwrap(), 16, 32, 2.0).unwrap()
}

fn zero() -> Nonlinearity {
    Nonlinearity::new(Profile::Zero, 0.0).unwrap()
}

fn sigma(m: &dyn NodeModel) -> Vec<f64> {
    vec![1.0; m.node_set().boundary.len()]
}

#[test]
fn linear_problem_without_source_is_the_sigma_field() {
    let m = fv();
    let rep = solve_linear(&m, &ProblemSpec::new(zero(), sigma(&m))).unwrap();
    assert_eq!(rep.u, m.poisson_sigma());
}

#[test]
fn linear_problem_inverts_the_spectrum() {
    let sp = Arc::new(build_spectrum(DomainGeometry::interval(PI, 112).unwrap(), 40).unwrap());
    let ks = Arc::new(KernelSet::new(sp.clone(), &BernsteinSpec::stable(0.3).unwrap()).unwrap());
    let m = SpectralModel::new(ks);
    let mut ps = ProblemSpec::new(zero(), vec![0.0; m.node_set().boundary.len()]);
    ps.lambda = Some(sp.node_values[1].iter().map(|v| 2.0 * v).collect());
    let rep = solve_linear(&m, &ps).unwrap();
    let scale = 2.0 / 4f64.powf(0.3);
    for (u, f) in rep.u.iter().zip(&sp.node_values[1]) {
        assert!((u - scale * f).abs() < 1e-8);
    }
}

#[test]
fn zero_nonlinearity_converges_in_one_step() {
    let m = fv();
    let ps = ProblemSpec::new(zero(), sigma(&m));
    let mono = solve_monotone(&m, &ps).unwrap();
    assert!(mono.converged && mono.iterations <= 1);
    let p = m.poisson_sigma();
    assert!(mono.u.iter().zip(p).all(|(a, b)| (a - b).abs() < 1e-12));
    let np = solve_nonpositive(&m, &ps).unwrap();
    assert!(np.u.iter().zip(p).all(|(a, b)| (a - b).abs() < 1e-12));
    let sg = solve_signed(&m, &ps, 1).unwrap();
    assert!(sg.u.iter().zip(p).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn absorption_solution_lies_below_the_sigma_field() {
    let m = fv();
    let mut ps = ProblemSpec::new(Nonlinearity::new(Profile::Absorption { p: 1.5 }, 1.0).unwrap(), sigma(&m));
    ps.controls.max_iter = 400;
    let rep = solve_nonpositive(&m, &ps).unwrap();
    assert!(rep.converged);
    assert_eq!(rep.classification, Classification::Convergent);
    let p = m.poisson_sigma();
    assert!(rep.u.iter().zip(p).all(|(u, p)| *u >= 0.0 && *u <= p + 1e-12));
    assert!(residual(&m, &ps, &rep.u).0 <= 1e-8);

    // u is a solution, so max{u, u} satisfies the subsolution inequality
    let sub = verify_max_subsolution(&m, &rep.u, &rep.u, &ps, 1e-3);
    assert!(sub.pass, "{}", sub.max_violation);
}

#[test]
fn bracket_with_trivial_bounds_is_the_linear_solution() {
    let m = fv();
    let n = m.node_set().len();
    let rep = bracket_solve(&m, &ProblemSpec::new(zero(), sigma(&m)), &vec![0.0; n], &vec![0.0; n]).unwrap();
    assert!(rep.u.iter().zip(m.poisson_sigma()).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn kato_inequality_on_nonnegative_and_eigenfunction_data() {
    let m = fv();
    let ns = m.node_set().clone();
    let h: Vec<f64> = ns.nodes.iter().map(|x| 1.0 + x[0] * x[0]).collect();
    let k = verify_kato(&m, &h, 1e-3);
    assert!(k.pass && k.defect_positive <= 1e-12 * k.sup_w);

    let sp = build_spectrum(DomainGeometry::disk(disk_rule_for(10)).unwrap(), 10).unwrap();
    let phi2: Vec<f64> = ns.nodes.iter().map(|&x| sp.eval(1, x)).collect();
    assert!(phi2.iter().any(|v| *v > 0.0) && phi2.iter().any(|v| *v < 0.0));
    let k = verify_kato(&m, &phi2, 1e-3);
    assert!(k.pass, "{k:?}");
}
