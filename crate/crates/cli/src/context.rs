//! Shared spectra and kernel sets, optionally backed by the on-disk cache.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use phid::bernstein::BernsteinSpec;
use phid::cache;
use phid::kernels::KernelSet;
use phid::spectrum::{build_spectrum, Spectrum};
use phid::Result;

use crate::specs::DomainSpec;

#[derive(Default)]
pub struct Context {
    pub cache_dir: Option<PathBuf>,
    spectra: HashMap<(String, usize), Arc<Spectrum>>,
    kernels: HashMap<(String, usize, String), Arc<KernelSet>>,
}

impl Context {
    pub fn new(cache_dir: Option<PathBuf>) -> Self {
        Self { cache_dir, ..Default::default() }
    }

    pub fn spectrum(&mut self, domain: &DomainSpec, n: usize) -> Result<Arc<Spectrum>> {
        let key = (domain.label(), n);
        if let Some(s) = self.spectra.get(&key) {
            return Ok(s.clone());
        }
        let s = match &self.cache_dir {
            Some(dir) => {
                let path = dir.join(format!("{}_n{n}.phidspec", domain.label()));
                if path.exists() {
                    cache::load(&path)?
                } else {
                    let s = build_spectrum(domain.geometry(n)?, n)?;
                    std::fs::create_dir_all(dir)?;
                    cache::save(&s, &path)?;
                    s
                }
            }
            None => build_spectrum(domain.geometry(n)?, n)?,
        };
        let s = Arc::new(s);
        self.spectra.insert(key, s.clone());
        Ok(s)
    }

    pub fn kernels(&mut self, domain: &DomainSpec, n: usize, phi: &BernsteinSpec) -> Result<Arc<KernelSet>> {
        let key = (domain.label(), n, serde_json::to_string(phi)?);
        if let Some(k) = self.kernels.get(&key) {
            return Ok(k.clone());
        }
        let spec = self.spectrum(domain, n)?;
        let k = Arc::new(KernelSet::new(spec, phi)?);
        self.kernels.insert(key, k.clone());
        Ok(k)
    }
}
