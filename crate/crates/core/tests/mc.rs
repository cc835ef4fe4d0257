use std::sync::Arc;

use phid::bernstein::BernsteinSpec;
use phid::geometry::DomainGeometry;
use phid::kernels::KernelSet;
use phid::mc::{estimate_green_potential, sample_subordinator, Integrand, PathConfig};
use phid::spectrum::{build_spectrum, disk_rule_for};
use phid::PhidError;

#[test]
fn stable_increments_match_the_laplace_exponent() {
    let s = 0.5;
    let cfg = PathConfig::new(s, 1, 2024);
    let m = 100_000;
    let inc = sample_subordinator(&cfg, m, 0).unwrap();
    assert!(inc.iter().all(|v| *v > 0.0));
    for lam in [0.5, 1.0, 2.0] {
        let e: Vec<f64> = inc.iter().map(|v| (-lam * v).exp()).collect();
        let mean = e.iter().sum::<f64>() / m as f64;
        let var = e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        let se_mean = (var / m as f64).sqrt();
        let exact = (-cfg.dt * lam.powf(s)).exp();
        assert!((mean - exact).abs() <= 3.0 * se_mean, "λ = {lam}: {mean} vs {exact} (se {se_mean})");
        // the same test on the log scale
        let se_log = se_mean / mean / cfg.dt;
        assert!((mean.ln() / cfg.dt + lam.powf(s)).abs() <= 3.0 * se_log);
    }
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let cfg = PathConfig::new(0.3, 1, 9);
    let a = sample_subordinator(&cfg, 50, 3).unwrap();
    assert_eq!(a, sample_subordinator(&cfg, 50, 3).unwrap());
    assert_ne!(a, sample_subordinator(&cfg, 50, 4).unwrap());
}

#[test]
fn zero_integrand_gives_exactly_zero_and_bump_is_nonnegative() {
    let sp = Arc::new(build_spectrum(DomainGeometry::disk(disk_rule_for(60)).unwrap(), 60).unwrap());
    let ks = KernelSet::new(sp, &BernsteinSpec::stable(0.5).unwrap()).unwrap();
    let cfg = PathConfig::new(0.5, 200, 1);
    let e = estimate_green_potential(&cfg, &ks, [0.2, 0.1], &Integrand::Zero).unwrap();
    assert_eq!(e.estimate, 0.0);
    assert_eq!(e.se, 0.0);
    let b = estimate_green_potential(&cfg, &ks, [0.2, 0.1], &Integrand::Bump { center: [0.0, 0.0], radius: 0.6 })
        .unwrap();
    assert!(b.estimate >= 0.0);
}

#[test]
fn only_stable_subordinators_are_simulated() {
    let comp = BernsteinSpec::stable_sum(&[(0.5, 0.3), (0.5, 0.7)]).unwrap();
    assert!(matches!(PathConfig::for_spec(&comp, 10, 0), Err(PhidError::Unsupported(_))));
    assert!(PathConfig::new(1.2, 10, 0).validate().is_err());
}
