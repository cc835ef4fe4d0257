//! Experiment driver for `phid`: configuration, catalog, checks and reports.

pub mod catalog;
pub mod checks;
pub mod config;
pub mod context;
pub mod report;
pub mod specs;

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use phid::Result;

use crate::catalog::{entry, CheckEntry};
use crate::config::ExperimentConfig;
use crate::context::Context;
use crate::report::{Check, Fingerprint, RunReport, Status, Timing};

/// Runs every check of the configured experiment.  A check that errors or
/// exceeds its runtime limit is recorded as FAIL with a note; it never
/// aborts the run.  With `concurrent`, checks run on separate threads, each
/// with its own context; the report order is the catalog order either way.
pub fn run(
    cfg: &ExperimentConfig,
    ctx: &mut Context,
    concurrent: bool,
    mut on_check: impl FnMut(&Check),
) -> Result<RunReport> {
    cfg.validate()?;
    let e = entry(&cfg.id)?;
    let started_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut timing = Timing { started_unix_s, ..Default::default() };
    let results: Vec<(Check, f64)> = if concurrent {
        let cache = ctx.cache_dir.clone();
        std::thread::scope(|sc| {
            let handles: Vec<_> = e
                .checks
                .iter()
                .map(|ce| {
                    let cache = cache.clone();
                    sc.spawn(move || run_one(ce, &mut Context::new(cache), cfg))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("check thread panicked")).collect()
        })
    } else {
        e.checks.iter().map(|ce| run_one(ce, ctx, cfg)).collect()
    };
    let mut out = Vec::new();
    for (ce, (c, secs)) in e.checks.iter().zip(results) {
        timing.runtimes_s.insert(ce.name.clone(), secs);
        on_check(&c);
        out.push(c);
    }
    Ok(RunReport {
        experiment: e.id,
        title: e.title,
        config: cfg.clone(),
        checks: out,
        fingerprint: Fingerprint::current(),
        timing,
    })
}

fn run_one(ce: &CheckEntry, ctx: &mut Context, cfg: &ExperimentConfig) -> (Check, f64) {
    let t0 = Instant::now();
    let blank = Check::new(&ce.name, &ce.title);
    let mut c = match checks::registry(&ce.name) {
        None => {
            let mut c = blank;
            c.status = Status::Fail;
            c.note(format!("no check named {} in the registry", ce.name));
            c
        }
        Some(f) => match f(ctx, cfg, blank) {
            Ok(c) => c,
            Err(err) => {
                let mut c = Check::new(&ce.name, &ce.title);
                c.status = Status::Fail;
                c.note(format!("error: {err}"));
                c
            }
        },
    };
    let secs = t0.elapsed().as_secs_f64();
    if let Some(limit) = ce.runtime_limit_s {
        c.tolerance("runtime_limit_s", limit);
        if secs > limit && c.status == Status::Pass {
            c.status = Status::Fail;
            c.note("runtime limit exceeded; see the timing record");
        }
    }
    (c, secs)
}
