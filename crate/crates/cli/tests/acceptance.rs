//! Runs every catalog experiment at its default configuration and prints one
//! PASS/FAIL line per acceptance criterion.  Exits nonzero if any fails.
//!
//! Set `PHID_ACCEPTANCE_ONLY=EXP1,EXP5` to run a subset.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use phid_cli::catalog::{catalog, default_config};
use phid_cli::context::Context;
use phid_cli::report::{Check, Status};

fn criterion_number(c: &Check) -> usize {
    c.name.trim_start_matches('C').parse().unwrap_or(usize::MAX)
}

fn main() -> ExitCode {
    let only: Option<Vec<String>> = std::env::var("PHID_ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').map(|s| s.trim().to_uppercase()).collect());
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let mut ctx = Context::new(Some(tmp.join("phid-acceptance-cache")));
    let mut all: Vec<(Check, String)> = Vec::new();
    for e in catalog() {
        if only.as_ref().is_some_and(|o| !o.contains(&e.id)) {
            continue;
        }
        let t0 = Instant::now();
        let mut cfg = default_config(&e.id).expect("catalog config");
        cfg.out_dir = Some(tmp.join("phid-acceptance"));
        let report = match phid_cli::run(&cfg, &mut ctx, false, |_| {}) {
            Ok(r) => r,
            Err(err) => {
                println!("FAIL {}: {err}", e.id);
                return ExitCode::FAILURE;
            }
        };
        if let Err(err) = report.write(&tmp.join("phid-acceptance")) {
            eprintln!("could not write report for {}: {err}", e.id);
        }
        eprintln!("{} finished in {:.1} s", e.id, t0.elapsed().as_secs_f64());
        for c in report.checks {
            all.push((c, e.id.clone()));
        }
    }
    all.sort_by_key(|(c, _)| criterion_number(c));
    let mut failed = 0;
    for (c, id) in &all {
        let ok = c.status == Status::Pass;
        if !ok {
            failed += 1;
        }
        let detail = c.notes.iter().filter(|n| n.len() < 160).cloned().collect::<Vec<_>>().join("; ");
        println!("{} [{id}]{}", c.line(), if detail.is_empty() { String::new() } else { format!(" ({detail})") });
    }
    println!("{} of {} criteria passed", all.len() - failed, all.len());
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
