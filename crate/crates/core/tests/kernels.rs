use std::f64::consts::PI;
use std::sync::Arc;

use phid::bernstein::BernsteinSpec;
use phid::geometry::DomainGeometry;
use phid::kernels::{green_apply_nodes, KernelSet, Potential, Route, SigmaRoute};
use phid::spectrum::{build_spectrum, disk_rule_for, Spectrum};

fn interval_pi(n: usize) -> Arc<Spectrum> {
    Arc::new(build_spectrum(DomainGeometry::interval(PI, 2 * n + 32).unwrap(), n).unwrap())
}

fn disk(n: usize) -> Arc<Spectrum> {
    Arc::new(build_spectrum(DomainGeometry::disk(disk_rule_for(n)).unwrap(), n).unwrap())
}

fn ks(sp: &Arc<Spectrum>, s: f64) -> KernelSet {
    KernelSet::new(sp.clone(), &BernsteinSpec::stable(s).unwrap()).unwrap()
}

#[test]
fn interval_heat_kernel_matches_partial_sums() {
    let k = ks(&interval_pi(60), 0.5);
    let x = [PI / 2.0, 0.0];
    let oracle: f64 = (1..200).map(|j| 2.0 / PI * (-(j * j) as f64).exp() * (j as f64 * PI / 2.0).sin().powi(2)).sum();
    assert!((k.heat_kernel(1.0, x, x).unwrap() - oracle).abs() < 1e-8);
    assert!((oracle - 0.23426).abs() < 1e-4);
    let (a, b) = ([0.4, 0.0], [2.1, 0.0]);
    for t in [1e-3, 0.05, 0.7] {
        let (p, q) = (k.heat_kernel(t, a, b).unwrap(), k.heat_kernel(t, b, a).unwrap());
        assert!((p - q).abs() <= 1e-14 + 1e-12 * p.abs(), "t = {t}: {p} {q}");
    }
}

#[test]
fn interval_classical_green_closed_form() {
    let k = ks(&interval_pi(200), 0.5);
    let (x, y) = ([1.0, 0.0], [2.0, 0.0]);
    let exact = (PI - 2.0) / PI;
    assert!((exact - 0.36338).abs() < 1e-5);
    for route in [Route::Spectral, Route::Subordination] {
        let g = k.green_classic(x, y, route).unwrap();
        assert!((g - exact).abs() < 1e-3, "{route:?}: {g}");
        assert!((g - k.green_classic(y, x, route).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn spectral_inversion_on_eigenfunctions() {
    let sp = interval_pi(80);
    for s in [0.3, 0.5, 0.7] {
        let k = ks(&sp, s);
        for j in 0..20 {
            let g = green_apply_nodes(&k, Potential::Phi, &sp.node_values[j]);
            let lam = (j + 1) as f64 * (j + 1) as f64;
            for (gi, fj) in g.iter().zip(&sp.node_values[j]) {
                assert!((gi - fj / lam.powf(s)).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn operator_scales_eigenfunctions() {
    let sp = interval_pi(40);
    let k = ks(&sp, 0.3);
    for j in [0, 3, 9] {
        let out = k.apply_spectral(&sp.node_values[j]);
        let lam = ((j + 1) * (j + 1)) as f64;
        for (o, f) in out.iter().zip(&sp.node_values[j]) {
            assert!((o - lam.powf(0.3) * f).abs() < 1e-9);
        }
    }
}

#[test]
fn conjugate_pairs_have_identical_products() {
    let sp = interval_pi(50);
    let (a, b) = (ks(&sp, 0.3), ks(&sp, 0.7));
    for j in 0..sp.len() {
        let pa = a.phi_l[j] * a.phic_l[j];
        let pb = b.phi_l[j] * b.phic_l[j];
        assert!((pa - pb).abs() <= 1e-12 * pa);
        assert!((pa / sp.lambdas[j] - 1.0).abs() < 1e-12);
    }
    assert!(a.factorization_mode_defect() < 1e-12);
}

#[test]
fn disk_kernel_properties() {
    let sp = disk(200);
    let k = ks(&sp, 0.5);
    let g = &sp.geom;

    // classical Poisson kernel integrates to one over the circle
    let x = [0.3, 0.2];
    let total: f64 =
        g.boundary.iter().map(|z| z.weight * k.poisson_classic(x, z, Route::Subordination).unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-3, "{total}");

    // P_φ(0, z) is constant in z and positive
    let vals: Vec<f64> = g.boundary.iter().step_by(7).map(|z| k.poisson_phi([0.0, 0.0], z, Route::Subordination).unwrap()).collect();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    assert!(lo > 0.0 && hi / lo - 1.0 < 1e-6, "{lo} {hi}");

    // jump kernel symmetry
    let (p, q) = ([0.1, -0.4], [-0.5, 0.2]);
    let (j1, j2) = (k.jump_kernel(p, q).unwrap(), k.jump_kernel(q, p).unwrap());
    assert!(j1 > 0.0 && (j1 - j2).abs() <= 1e-10 * j1);

    // P_φσ blows up monotonically along a normal ray
    let ray = g.normal_ray(&g.boundary[3], 8, 1e-2);
    let ps: Vec<f64> = ray.iter().map(|&x| k.poisson_sigma(x, SigmaRoute::Survival).unwrap()).collect();
    assert!(ps.windows(2).all(|w| w[1] > w[0]), "{ps:?}");
}
