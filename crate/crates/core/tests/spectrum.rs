use phid::geometry::{DomainGeometry, GridMask};
use phid::spectrum::{build_spectrum, disk_rule_for};
use std::f64::consts::PI;

/// J_0 from its power series; independent of the library's recurrence.
fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let (mut t, mut s) = (1.0, 1.0);
    for k in 1..120 {
        t *= q / (k * k) as f64;
        s += t;
    }
    s
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) < 0.0) == (fa < 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn interval_eigenvalues_and_slopes() {
    let g = DomainGeometry::interval(PI, 64).unwrap();
    let s = build_spectrum(g, 3).unwrap();
    for (j, l) in s.lambdas.iter().enumerate() {
        assert!((l - ((j + 1) * (j + 1)) as f64).abs() < 1e-12);
    }
    let x = 0.7;
    assert!((s.eval(1, [x, 0.0]) - (2.0 / PI).sqrt() * (2.0 * x).sin()).abs() < 1e-14);
    assert!((s.eigen_normal_derivative(0, 0).unwrap() - (2.0 / PI).sqrt()).abs() < 1e-14);
    let w = s.verify_weyl();
    assert!((w.min - 1.0).abs() < 1e-12 && (w.max - 1.0).abs() < 1e-12);
    assert!(s.eigen_normal_derivative(5, 0).is_err());
}

#[test]
fn unit_square_ground_state() {
    let g = DomainGeometry::rectangle(1.0, 1.0, 24, 24, 64).unwrap();
    let s = build_spectrum(g, 4).unwrap();
    assert!((s.lambdas[0] - 2.0 * PI * PI).abs() < 1e-12);
    // slope on the bottom edge is 2π sin(πx)
    for (b, bp) in s.geom.boundary.iter().enumerate() {
        if bp.z[1] == 0.0 {
            let want = 2.0 * PI * (PI * bp.z[0]).sin();
            assert!((s.boundary_slopes[0][b] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn disk_ground_state_matches_bisection_oracle() {
    let z = bisect(j0_series, 2.0, 3.0);
    let g = DomainGeometry::disk(disk_rule_for(10)).unwrap();
    let s = build_spectrum(g, 10).unwrap();
    assert!((s.lambdas[0] - z * z).abs() < 1e-10);
    assert!((s.lambdas[0] - 5.78319).abs() < 1e-5);
    // radial symmetry of the first mode's boundary slope
    let sl = &s.boundary_slopes[0];
    let (lo, hi) = sl.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi - lo < 1e-12 && lo > 0.0);
}

#[test]
fn disk_400_modes_are_orthonormal() {
    let g = DomainGeometry::disk(disk_rule_for(400)).unwrap();
    let s = build_spectrum(g, 400).unwrap();
    assert!(s.orthonormality_defect < 1e-6, "defect {}", s.orthonormality_defect);
    // eigenvalues sorted
    assert!(s.lambdas.windows(2).all(|w| w[0] <= w[1]));
    assert!(s.lambdas[0] < s.lambdas[1]);
    let c = s.sup_norm_constant();
    assert!(c.is_finite() && c > 0.0);
}

#[test]
fn disk_weyl_and_hopf_bands() {
    let g = DomainGeometry::disk(disk_rule_for(50)).unwrap();
    let s = build_spectrum(g, 50).unwrap();
    let w = s.verify_weyl();
    assert!(w.pass && w.width() <= 4.0, "{w:?}");
    let h = s.verify_hopf(0.02);
    assert!(h.pass && h.width() <= 3.0, "{h:?}");
}

#[test]
fn coefficients_recover_a_mode() {
    let g = DomainGeometry::disk(disk_rule_for(20)).unwrap();
    let s = build_spectrum(g, 20).unwrap();
    let c = s.coefficients(&s.node_values[1]);
    for (j, v) in c.coef.iter().enumerate() {
        let want = if j == 1 { 1.0 } else { 0.0 };
        assert!((v - want).abs() < 1e-6);
    }
    assert!(c.parseval_defect.abs() < 1e-6);
    let zero = s.coefficients(&vec![0.0; s.geom.n_nodes()]);
    assert!(zero.coef.iter().all(|&v| v == 0.0));
    let d = s.coefficients(&s.geom.delta.clone());
    assert!(d.coef[0] > 0.0);
    assert!(d.coef.iter().skip(1).all(|v| v.abs() < d.coef[0]));
}

#[test]
fn grid_mask_converges_to_disk() {
    let exact = 2.404825557695773f64.powi(2);
    let e64 = {
        let s = build_spectrum(DomainGeometry::grid_mask(GridMask::disk(64)).unwrap(), 4).unwrap();
        assert!(s.orthonormality_defect < 1e-3);
        (s.lambdas[0] - exact).abs() / exact
    };
    let e96 = {
        let s = build_spectrum(DomainGeometry::grid_mask(GridMask::disk(96)).unwrap(), 4).unwrap();
        (s.lambdas[0] - exact).abs() / exact
    };
    assert!(e64 <= 0.05, "64×64 error {e64}");
    assert!(e96 < e64, "{e96} !< {e64}");
}

#[test]
fn grid_mask_rejects_too_many_modes() {
    let g = DomainGeometry::grid_mask(GridMask::disk(16)).unwrap();
    let n = g.n_nodes();
    assert!(build_spectrum(g, n / 4).is_err());
}
