//! Binary spectrum cache.
//!
//! Layout: the magic `PHIDSPEC`, a little-endian u32 format version, a
//! little-endian u64 header length, a JSON header, then the payload of
//! little-endian f64 values.  The header carries the SHA-256 of the
//! payload; loading verifies it and the orthonormality of the modes.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PhidError, Result};
use crate::geometry::{BoundaryPoint, DomainGeometry, Shape};
use crate::spectrum::{Mode, Spectrum};

pub const MAGIC: &[u8; 8] = b"PHIDSPEC";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CacheHeader {
    pub shape: Shape,
    pub dim: usize,
    pub n_modes: usize,
    pub n_nodes: usize,
    pub n_boundary: usize,
    pub diam: f64,
    pub volume: f64,
    pub perimeter: f64,
    pub inradius: f64,
    pub spacing: f64,
    pub grid_index: Vec<(usize, usize)>,
    pub ghost_links: Vec<(usize, usize)>,
    pub modes: Vec<Mode>,
    pub sha256: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn payload(s: &Spectrum) -> Vec<u8> {
    let g = &s.geom;
    let mut v: Vec<f64> = Vec::new();
    v.extend(&s.lambdas);
    for p in &g.nodes {
        v.extend(p);
    }
    v.extend(&g.weights);
    v.extend(&g.delta);
    for b in &g.boundary {
        v.extend([b.z[0], b.z[1], b.normal[0], b.normal[1], b.curvature, b.weight]);
    }
    for row in s.node_values.iter().chain(&s.boundary_slopes) {
        v.extend(row);
    }
    v.iter().flat_map(|x| x.to_le_bytes()).collect()
}

pub fn encode(s: &Spectrum) -> Result<Vec<u8>> {
    let g = &s.geom;
    let body = payload(s);
    let header = CacheHeader {
        shape: g.shape.clone(),
        dim: g.dim,
        n_modes: s.len(),
        n_nodes: g.nodes.len(),
        n_boundary: g.boundary.len(),
        diam: g.diam,
        volume: g.volume,
        perimeter: g.perimeter,
        inradius: g.inradius,
        spacing: g.spacing,
        grid_index: g.grid_index.clone(),
        ghost_links: g.ghost_links.clone(),
        modes: s.modes.clone(),
        sha256: hex(&Sha256::digest(&body)),
    };
    let h = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(20 + h.len() + body.len());
    out.extend(MAGIC);
    out.extend(VERSION.to_le_bytes());
    out.extend((h.len() as u64).to_le_bytes());
    out.extend(&h);
    out.extend(&body);
    Ok(out)
}

/// Orthonormality tolerance a loaded spectrum must meet.
fn gram_tolerance(shape: &Shape) -> f64 {
    if matches!(shape, Shape::GridMask { .. }) {
        1e-3
    } else {
        1e-6
    }
}

pub fn decode(bytes: &[u8]) -> Result<Spectrum> {
    let bad = |m: &str| PhidError::Cache(m.to_string());
    if bytes.len() < 20 || &bytes[..8] != MAGIC {
        return Err(bad("not a spectrum cache (bad magic)"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(PhidError::Cache(format!("cache format version {version}, expected {VERSION}")));
    }
    let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    if bytes.len() < 20 + hlen {
        return Err(bad("truncated cache header"));
    }
    let header: CacheHeader =
        serde_json::from_slice(&bytes[20..20 + hlen]).map_err(|e| PhidError::Cache(format!("unreadable cache header: {e}")))?;
    let body = &bytes[20 + hlen..];
    let digest = hex(&Sha256::digest(body));
    if digest != header.sha256 {
        return Err(PhidError::Cache(format!(
            "checksum mismatch: payload sha256 {digest} does not match header {}; cache is corrupted",
            header.sha256
        )));
    }
    let (n, m, nb) = (header.n_modes, header.n_nodes, header.n_boundary);
    let expect = n + 2 * m + 2 * m + 6 * nb + n * m + n * nb;
    if body.len() != 8 * expect {
        return Err(PhidError::Cache(format!("payload holds {} bytes, expected {}", body.len(), 8 * expect)));
    }
    let vals: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let mut it = vals.into_iter();
    let mut take = |k: usize| -> Vec<f64> { it.by_ref().take(k).collect() };
    let lambdas = take(n);
    let nodes = take(2 * m).chunks_exact(2).map(|c| [c[0], c[1]]).collect();
    let weights = take(m);
    let delta = take(m);
    let boundary = take(6 * nb)
        .chunks_exact(6)
        .map(|c| BoundaryPoint { z: [c[0], c[1]], normal: [c[2], c[3]], curvature: c[4], weight: c[5] })
        .collect();
    let node_values = (0..n).map(|_| take(m)).collect();
    let boundary_slopes = (0..n).map(|_| take(nb)).collect();
    let geom = DomainGeometry {
        shape: header.shape.clone(),
        dim: header.dim,
        nodes,
        weights,
        delta,
        boundary,
        diam: header.diam,
        volume: header.volume,
        perimeter: header.perimeter,
        inradius: header.inradius,
        spacing: header.spacing,
        grid_index: header.grid_index,
        ghost_links: header.ghost_links,
    };
    let s = Spectrum::finish(geom, lambdas, header.modes, node_values, boundary_slopes);
    let tol = gram_tolerance(&header.shape);
    if !(s.orthonormality_defect <= tol) {
        return Err(PhidError::Cache(format!(
            "orthonormality defect {:e} above {tol:e} on load",
            s.orthonormality_defect
        )));
    }
    Ok(s)
}

pub fn save(s: &Spectrum, path: &Path) -> Result<()> {
    let bytes = encode(s)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Spectrum> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}
