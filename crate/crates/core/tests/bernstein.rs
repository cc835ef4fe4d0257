use phid::bernstein::{
    conjugate, levy_density, log_grid, phi_eval, phi_prime, potential_density, verify_wsc, BernsteinSpec,
};
use proptest::prelude::*;

/// ∫₀^∞ f(t)dt by the trapezoid rule in u = ln t.
fn log_trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    (0..=n)
        .map(|k| {
            let u = lo + k as f64 * h;
            let t = u.exp();
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            w * f(t) * t
        })
        .sum::<f64>()
        * h
}

#[test]
fn worked_values() {
    let half = BernsteinSpec::stable(0.5).unwrap();
    assert!((phi_eval(&half, 4.0).unwrap() - 2.0).abs() < 1e-14);
    assert!((phi_prime(&half, 4.0).unwrap() - 0.25).abs() < 1e-14);
    assert!((phi_prime(&BernsteinSpec::stable(0.3).unwrap(), 1.0).unwrap() - 0.3).abs() < 1e-14);
    assert!(BernsteinSpec::stable(1.0).is_err());
    let comp = BernsteinSpec::stable_sum(&[(0.5, 0.3), (0.5, 0.7)]).unwrap();
    assert!((phi_eval(&comp, 1.0).unwrap() - 1.0).abs() < 1e-14);
    let c = conjugate(&BernsteinSpec::stable(0.3).unwrap());
    assert_eq!(c.conj, BernsteinSpec::stable(0.7).unwrap());
    assert_eq!(conjugate(&half).conj, half);
}

#[test]
fn tabulated_pair_multiplies_to_lambda() {
    let lam = log_grid(1e-2, 1e4, 40);
    let val: Vec<f64> = lam.iter().map(|l| l.powf(0.4) + 0.1 * l.powf(0.2)).collect();
    let spec = BernsteinSpec::tabulated(&lam, &val).unwrap();
    let pair = conjugate(&spec);
    for &l in &[0.05, 1.0, 37.0, 2000.0] {
        let prod = pair.spec.value(l) * pair.conj.value(l);
        assert!((prod / l - 1.0).abs() < 1e-12);
    }
}

#[test]
fn potential_density_laplace_transform() {
    let half = BernsteinSpec::stable(0.5).unwrap();
    let u1 = potential_density(&half, 1.0).unwrap();
    assert!((u1 - 0.564190).abs() < 1e-6);
    for lam in [0.5, 1.0, 2.0, 8.0] {
        let lt = log_trapezoid(|t| (-lam * t).exp() * potential_density(&half, t).unwrap(), -30.0, 6.0, 6000);
        assert!((lt - lam.powf(-0.5)).abs() < 1e-6, "λ = {lam}: {lt}");
    }
    let ts = log_grid(1e-3, 1e3, 30);
    for &t in &ts {
        assert!(potential_density(&half, 2.0 * t).unwrap() <= potential_density(&half, t).unwrap());
    }
}

#[test]
fn levy_density_reproduces_phi() {
    let half = BernsteinSpec::stable(0.5).unwrap();
    assert!((levy_density(&half, 1.0).unwrap() - 0.282095).abs() < 1e-6);
    for lam in [0.5, 3.0] {
        let v = log_trapezoid(|t| (1.0 - (-lam * t).exp()) * levy_density(&half, t).unwrap(), -40.0, 40.0, 16000);
        assert!((v - lam.sqrt()).abs() < 1e-4, "{v}");
    }
}

#[test]
fn wsc_estimates() {
    let g = log_grid(1.0, 1e6, 25);
    let r = verify_wsc(&BernsteinSpec::stable(0.5).unwrap(), &g, &g).unwrap();
    assert!((r.delta1_hat - 0.5).abs() < 1e-12 && (r.delta2_hat - 0.5).abs() < 1e-12);
    let comp = BernsteinSpec::stable_sum(&[(0.5, 0.3), (0.5, 0.7)]).unwrap();
    let r = verify_wsc(&comp, &g, &g).unwrap();
    // direct grid oracle
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let phi = |l: f64| 0.5 * l.powf(0.3) + 0.5 * l.powf(0.7);
    for &t in &g {
        for &l in g.iter().filter(|l| **l > 1.0) {
            let e = (phi(l * t) / phi(t)).ln() / l.ln();
            lo = lo.min(e);
            hi = hi.max(e);
        }
    }
    assert!((r.delta1_hat - lo).abs() < 1e-12 && (r.delta2_hat - hi).abs() < 1e-12);
    assert!(r.delta1_hat >= 0.3 && r.delta2_hat <= 0.7 && r.delta1_hat <= r.delta2_hat);
}

proptest! {
    #[test]
    fn concavity_ratio_in_unit_interval(s in 0.05f64..0.95, w in 0.05f64..0.95, l in 1e-3f64..1e5) {
        for spec in [
            BernsteinSpec::stable(s).unwrap(),
            BernsteinSpec::stable_sum(&[(w, s), (1.0 - w, 0.5)]).unwrap(),
            BernsteinSpec::log_stable(0.5 * s, 0.4).unwrap(),
        ] {
            let r = spec.derivative(l) * l / spec.value(l);
            prop_assert!(r > 0.0 && r <= 1.0 + 1e-12, "{r}");
        }
    }

    #[test]
    fn wsc_exponents_are_ordered(s1 in 0.05f64..0.95, s2 in 0.05f64..0.95, w in 0.05f64..0.95) {
        let g = log_grid(1.0, 1e6, 12);
        let spec = BernsteinSpec::stable_sum(&[(w, s1), (1.0 - w, s2)]).unwrap();
        let r = verify_wsc(&spec, &g, &g).unwrap();
        prop_assert!(r.valid);
        prop_assert!(r.delta1_hat >= s1.min(s2) - 1e-12 && r.delta2_hat <= s1.max(s2) + 1e-12);
    }
}
