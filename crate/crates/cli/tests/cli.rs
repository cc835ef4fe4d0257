use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Command;

use phid::cache;
use phid::geometry::DomainGeometry;
use phid::spectrum::build_spectrum;
use phid_cli::catalog::{catalog, default_config, entry};
use phid_cli::checks::registry;
use phid_cli::config::ExperimentConfig;
use phid_cli::context::Context;
use phid_cli::report::{emit_plot_data, Check, Status};

fn tmp(name: &str) -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&p);
    std::fs::create_dir_all(&p).unwrap();
    p
}

fn cheap_config() -> ExperimentConfig {
    ExperimentConfig::parse(r#"{"id": "EXP1", "domain": "interval:2", "n_modes": 60, "seed": 3}"#).unwrap()
}

#[test]
fn config_defaults_and_overrides() {
    let c = ExperimentConfig::parse(
        r#"{"id": "EXP5", "phi": "stable:0.3", "n_modes": 200, "tolerances": {"C6.slope": 0.1},
            "params": {"profile_angles": 48}}"#,
    )
    .unwrap();
    assert_eq!(c.n_modes, 200);
    assert_eq!(c.domain, "disk");
    assert_eq!(c.params.profile_angles, 48);
    assert_eq!(c.params.pairs, 10);
    assert_eq!(c.tol("C6.slope", 0.15), 0.1);
    assert_eq!(c.tol("C7.band", 30.0), 30.0);
    let mut c = c;
    c.override_tolerances(&["C7.band=25".into()]).unwrap();
    assert_eq!(c.tol("C7.band", 30.0), 25.0);
    assert!(c.override_tolerances(&["C7.band".into()]).is_err());
}

#[test]
fn config_rejects_bad_input() {
    assert!(ExperimentConfig::parse(r#"{"id": "EXP1", "colour": 3}"#).is_err());
    assert!(ExperimentConfig::parse(r#"{"id": "EXP1", "phi": "stable:1.5"}"#).is_err());
    assert!(ExperimentConfig::parse(r#"{"id": "EXP1", "domain": "torus"}"#).is_err());
    assert!(ExperimentConfig::parse("id = EXP1").is_err());
}

#[test]
fn every_criterion_in_exactly_one_experiment() {
    let mut seen = BTreeSet::new();
    for e in catalog() {
        for c in &e.checks {
            assert!(seen.insert(c.name.clone()), "{} listed twice", c.name);
            assert!(registry(&c.name).is_some(), "{} has no check", c.name);
        }
    }
    let want: BTreeSet<String> = (1..=17).map(|k| format!("C{k}")).collect();
    assert_eq!(seen, want);
}

#[test]
fn unknown_experiment_is_a_usage_error() {
    let err = entry("EXP42").unwrap_err().to_string();
    assert!(err.contains("EXP42") && err.contains("EXP1"), "{err}");
    let out = Command::new(env!("CARGO_BIN_EXE_phid")).args(["experiment", "run", "EXP42"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown experiment"));
}

#[test]
fn corrupted_cache_is_refused_with_checksum_message() {
    let dir = tmp("corrupt-cache");
    let s = build_spectrum(DomainGeometry::interval(2.0, 80).unwrap(), 20).unwrap();
    let path = dir.join("interval.phidspec");
    cache::save(&s, &path).unwrap();
    let ok = Command::new(env!("CARGO_BIN_EXE_phid"))
        .args(["spectrum", "verify", "--file"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));

    let mut bytes = std::fs::read(&path).unwrap();
    let n = bytes.len();
    bytes[n - 20] ^= 0x5a;
    std::fs::write(&path, &bytes).unwrap();
    let bad = Command::new(env!("CARGO_BIN_EXE_phid"))
        .args(["spectrum", "verify", "--file"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("checksum"));
}

#[test]
fn same_seed_gives_byte_identical_report() {
    let run = || {
        let mut ctx = Context::new(None);
        phid_cli::run(&cheap_config(), &mut ctx, false, |_| {}).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert!(a.checks.iter().all(|c| c.status == Status::Pass), "{:#?}", a.checks);
    assert!(!a.to_json().unwrap().contains("runtimes_s"));

    let d = tmp("det");
    let mut reports = Vec::new();
    for _ in 0..2 {
        let st = Command::new(env!("CARGO_BIN_EXE_phid"))
            .args(["experiment", "run", "EXP1", "--domain", "interval:2", "--n-modes", "60", "--seed", "3", "--out"])
            .arg(&d)
            .status()
            .unwrap();
        assert!(st.success());
        reports.push(std::fs::read(d.join("exp1.report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert!(d.join("exp1.timing.json").exists());
}

#[test]
fn concurrent_run_matches_sequential() {
    let cfg = cheap_config();
    let a = phid_cli::run(&cfg, &mut Context::new(None), false, |_| {}).unwrap();
    let b = phid_cli::run(&cfg, &mut Context::new(None), true, |_| {}).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn tolerance_override_flips_status() {
    let mut cfg = cheap_config();
    cfg.override_tolerances(&["C1.sup_defect=0".into()]).unwrap();
    let r = phid_cli::run(&cfg, &mut Context::new(None), false, |_| {}).unwrap();
    assert!(r.any_fail());
    assert_eq!(r.checks[0].status, Status::Fail);
}

fn run_check(name: &str, cfg: &ExperimentConfig) -> Check {
    let f = registry(name).unwrap();
    f(&mut Context::new(None), cfg, Check::new(name, name)).unwrap()
}

fn read_csv(path: &PathBuf) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn plot_data_have_schema_headers() {
    let mut cfg = default_config("EXP5").unwrap();
    cfg.n_modes = 60;
    cfg.params.slope_ray_points = 6;
    let c6 = run_check("C6", &cfg);
    let mut cfg2 = default_config("EXP2").unwrap();
    cfg2.n_modes = 60;
    cfg2.params.pairs = 3;
    let c2 = run_check("C2", &cfg2);
    let mut cfg7 = default_config("EXP7").unwrap();
    cfg7.params.fv_radial = 16;
    cfg7.params.fv_angular = 32;
    let c11 = run_check("C11", &cfg7);

    let mut report = phid_cli::run(&cheap_config(), &mut Context::new(None), false, |_| {}).unwrap();
    report.checks = vec![c6, c2, c11];
    let dir = tmp("plot-data");
    let files = emit_plot_data(&report, &dir).unwrap();
    assert_eq!(files.len(), 3);

    let (h, rows) = read_csv(&dir.join("exp1_c6_slope.csv"));
    assert_eq!(h, "# s,delta,p_sigma");
    assert_eq!(rows.len(), 3 * 6);
    for w in rows.windows(2).filter(|w| w[0][0] == w[1][0]) {
        assert!(w[1][1] < w[0][1], "δ column not monotone");
    }

    let (h, rows) = read_csv(&dir.join("exp1_c2_routes.csv"));
    assert!(h.starts_with("# x0,x1,y0,y1"));
    assert_eq!(rows.len(), 3);

    let (h, rows) = read_csv(&dir.join("exp1_c11_residuals.csv"));
    assert_eq!(h, "# iteration,residual_sup,residual_l1");
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r[0], k as f64);
    }
}
