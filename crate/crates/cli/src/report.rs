//! Run reports and plot-data emission.
//!
//! The JSON report is a pure function of config and seed.  Wall-clock
//! quantities (start time, per-check runtimes) live in a separate timing
//! record written next to it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use phid::Result;

use crate::config::ExperimentConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// A table destined for a CSV file with a one-line schema header.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# {}\n", self.columns.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub title: String,
    pub status: Status,
    pub measured: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub datasets: Vec<Dataset>,
}

impl Check {
    pub fn new(name: &str, title: &str) -> Self {
        Self {
            name: name.into(),
            title: title.into(),
            status: Status::Inconclusive,
            measured: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            notes: vec![],
            datasets: vec![],
        }
    }

    pub fn measure(&mut self, key: &str, v: f64) -> &mut Self {
        self.measured.insert(key.into(), v);
        self
    }

    pub fn tolerance(&mut self, key: &str, v: f64) -> &mut Self {
        self.tolerances.insert(key.into(), v);
        self
    }

    pub fn note(&mut self, s: impl Into<String>) -> &mut Self {
        self.notes.push(s.into());
        self
    }

    pub fn line(&self) -> String {
        let mut parts: Vec<String> = self.measured.iter().map(|(k, v)| format!("{k}={v:.4e}")).collect();
        parts.truncate(6);
        format!("{} {:<4} {}: {}", self.status.label(), self.name, self.title, parts.join(" "))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Fingerprint {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
    pub optimized: bool,
}

impl Fingerprint {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            optimized: !cfg!(debug_assertions),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Timing {
    pub started_unix_s: u64,
    pub runtimes_s: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub experiment: String,
    pub title: String,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub fingerprint: Fingerprint,
    #[serde(skip)]
    pub timing: Timing,
}

impl RunReport {
    pub fn any_fail(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `<id>.report.json`, `<id>.timing.json` and the CSV datasets.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let id = self.experiment.to_lowercase();
        let rp = dir.join(format!("{id}.report.json"));
        std::fs::write(&rp, self.to_json()?)?;
        let tp = dir.join(format!("{id}.timing.json"));
        std::fs::write(&tp, serde_json::to_string_pretty(&self.timing)?)?;
        let mut out = vec![rp, tp];
        out.extend(emit_plot_data(self, dir)?);
        Ok(out)
    }
}

/// One CSV per dataset: `<id>_<check>_<name>.csv`.
pub fn emit_plot_data(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let id = report.experiment.to_lowercase();
    let mut out = Vec::new();
    for c in &report.checks {
        for d in &c.datasets {
            let p = dir.join(format!("{id}_{}_{}.csv", c.name.to_lowercase(), d.name));
            std::fs::write(&p, d.to_csv())?;
            out.push(p);
        }
    }
    Ok(out)
}
