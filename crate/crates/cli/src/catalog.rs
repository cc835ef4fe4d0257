//! The experiment catalog.  Entries are data: each lists the checks it
//! runs, by name, from the check registry.

use serde::{Deserialize, Serialize};

use phid::{PhidError, Result};

use crate::config::ExperimentConfig;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckEntry {
    pub name: String,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_limit_s: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CatalogEntry {
    pub id: String,
    pub title: String,
    pub checks: Vec<CheckEntry>,
}

const CATALOG: &str = include_str!("catalog.json");

pub fn catalog() -> Vec<CatalogEntry> {
    serde_json::from_str(CATALOG).expect("embedded catalog parses")
}

pub fn entry(id: &str) -> Result<CatalogEntry> {
    catalog()
        .into_iter()
        .find(|e| e.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| {
            let ids: Vec<String> = catalog().into_iter().map(|e| e.id).collect();
            PhidError::Invalid(format!("unknown experiment id '{id}'; known: {}", ids.join(", ")))
        })
}

/// Default configuration of a catalog experiment.
pub fn default_config(id: &str) -> Result<ExperimentConfig> {
    let e = entry(id)?;
    ExperimentConfig::parse(&format!("{{\"id\": \"{}\"}}", e.id))
}
