use std::sync::Arc;

use phid::bernstein::BernsteinSpec;
use phid::geometry::{DomainGeometry, Point};
use phid::kernels::{KernelSet, Route, SigmaRoute};
use phid::potentials::{
    green_potential, pointwise_boundary_ratio, poisson_integral, u_profile_bound, weak_boundary_trace,
    BoundaryMeasure, InteriorMeasure, ProfileClass, ProfileQuadrature, UKind, UProfile,
};
use phid::spectrum::{build_spectrum, disk_rule_for};
use phid::PhidError;

fn disk_ks(n: usize) -> KernelSet {
    let sp = Arc::new(build_spectrum(DomainGeometry::disk(disk_rule_for(n)).unwrap(), n).unwrap());
    KernelSet::new(sp, &BernsteinSpec::stable(0.5).unwrap()).unwrap()
}

#[test]
fn green_potential_of_zero_and_of_a_dirac() {
    let ks = disk_ks(120);
    let g = &ks.spectrum.geom;
    let z = green_potential(&ks, &InteriorMeasure::zero(g)).unwrap();
    assert!(z.values.iter().all(|v| *v == 0.0));
    assert_eq!(z.at(&ks, [0.2, 0.1]), 0.0);

    let d = green_potential(&ks, &InteriorMeasure::dirac(g, [0.0, 0.0], 1.0)).unwrap();
    for x in [[0.3, 0.1], [-0.5, 0.4], [0.0, -0.8]] {
        let direct = ks.green_phi(x, [0.0, 0.0], Route::Subordination).unwrap();
        assert!((d.at(&ks, x) - direct).abs() <= 1e-12 * direct);
    }
}

#[test]
fn green_potential_is_linear() {
    let ks = disk_ks(120);
    let g = &ks.spectrum.geom;
    let f1 = |x: Point| 1.0 + x[0];
    let f2 = |x: Point| x[1] * x[1];
    let a = green_potential(&ks, &InteriorMeasure::from_fn(g, f1)).unwrap();
    let b = green_potential(&ks, &InteriorMeasure::from_fn(g, f2)).unwrap();
    let c = green_potential(&ks, &InteriorMeasure::from_fn(g, |x| 2.0 * f1(x) - 3.0 * f2(x))).unwrap();
    for x in [[0.1, 0.2], [-0.6, 0.3]] {
        let want = 2.0 * a.at(&ks, x) - 3.0 * b.at(&ks, x);
        assert!((c.at(&ks, x) - want).abs() < 1e-12 * want.abs().max(1.0));
    }
}

#[test]
fn poisson_integral_of_sigma_is_the_sigma_field() {
    let ks = disk_ks(120);
    let g = &ks.spectrum.geom;
    let p = poisson_integral(&ks, &BoundaryMeasure::sigma(g)).unwrap();
    for x in [[0.0, 0.0], [0.4, -0.3], [0.85, 0.0]] {
        let direct = ks.poisson_sigma(x, SigmaRoute::Boundary).unwrap();
        assert!((p.at(&ks, x) / direct - 1.0).abs() < 1e-9, "{x:?}");
    }
    assert!(p.constant.is_finite() && p.constant > 0.0);
}

#[test]
fn poisson_integral_of_a_point_mass_is_the_kernel() {
    let ks = disk_ks(120);
    let g = &ks.spectrum.geom;
    let node = 5;
    let p = poisson_integral(&ks, &BoundaryMeasure::dirac(g, node, 1.0)).unwrap();
    let x = [0.2, 0.3];
    let direct = ks.poisson_phi(x, &g.boundary[node], Route::Subordination).unwrap();
    assert!((p.at(&ks, x) / direct - 1.0).abs() < 1e-9);
}

#[test]
fn ratio_of_sigma_field_to_itself_is_one() {
    let ks = disk_ks(120);
    let g = &ks.spectrum.geom;
    let z = g.boundary[0];
    let ray = g.normal_ray(&z, 6, 1e-2);
    let u = |x: Point| ks.poisson_sigma(x, SigmaRoute::Survival).unwrap();
    let seq = pointwise_boundary_ratio(&ks, &u, z.z, &ray, 0.0).unwrap();
    assert!(seq.points.iter().all(|p| (p.ratio - 1.0).abs() < 1e-12));
}

#[test]
fn trace_of_zero_vanishes_and_narrow_collars_are_refused() {
    let ks = disk_ks(120);
    let r = weak_boundary_trace(&ks, &|_| 0.0, 0.2, &|_| 1.0).unwrap();
    assert_eq!(r.value, 0.0);
    let err = weak_boundary_trace(&ks, &|_| 0.0, 1e-6, &|_| 1.0).unwrap_err();
    assert!(matches!(err, PhidError::Precondition { .. }), "{err}");
}

#[test]
fn profile_classification() {
    let steep = UProfile::new(UKind::Power { beta: 2.5 }).unwrap();
    assert!(!steep.u1.holds);
    let ks = disk_ks(120);
    let b = u_profile_bound(&ks, &steep, [0.5, 0.0], ProfileQuadrature::default()).unwrap();
    assert_eq!(b.class, ProfileClass::Infinite);

    let ok = UProfile::new(UKind::Power { beta: 1.4 }).unwrap();
    assert!(ok.all_hold());
    let b = u_profile_bound(&ks, &ok, [0.5, 0.0], ProfileQuadrature { n_angular: 48, h: 1.0 / 16.0 }).unwrap();
    assert_eq!(b.class, ProfileClass::Finite);
    assert!(b.lhs > 0.0 && b.rhs > 0.0 && b.ratio.is_finite());
}
