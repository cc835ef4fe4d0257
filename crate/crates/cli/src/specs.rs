//! Text forms of φ and domain specs shared by config files and flags.
//!
//! φ: `stable:S`, `stable_sum:W@S+W@S`, `log_stable:S:R`, `classical`.
//! Domain: `disk`, `interval:L`, `rectangle:A:B`, `grid:N` (N×N mask of
//! the unit disk).

use phid::bernstein::BernsteinSpec;
use phid::geometry::{DomainGeometry, GridMask};
use phid::spectrum::disk_rule_for;
use phid::{PhidError, Result};

fn num(s: &str, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| PhidError::Invalid(format!("cannot read {what} from '{s}'")))
}

pub fn parse_phi(text: &str) -> Result<BernsteinSpec> {
    let parts: Vec<&str> = text.trim().split(':').collect();
    match parts.as_slice() {
        ["stable", s] => BernsteinSpec::stable(num(s, "stable index")?),
        ["log_stable", s, r] => BernsteinSpec::log_stable(num(s, "stable index")?, num(r, "log power")?),
        ["stable_sum", terms] => {
            let t = terms
                .split('+')
                .map(|term| {
                    let (w, s) = term
                        .split_once('@')
                        .ok_or_else(|| PhidError::Invalid(format!("stable_sum term '{term}' is not W@S")))?;
                    Ok((num(w, "weight")?, num(s, "index")?))
                })
                .collect::<Result<Vec<_>>>()?;
            BernsteinSpec::stable_sum(&t)
        }
        ["classical"] => Ok(BernsteinSpec::classical()),
        _ => Err(PhidError::Invalid(format!("unknown φ spec '{text}'"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    Disk,
    Interval(f64),
    Rectangle(f64, f64),
    Grid(usize),
}

impl DomainSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.trim().split(':').collect();
        let d = match parts.as_slice() {
            ["disk"] => DomainSpec::Disk,
            ["interval", l] => DomainSpec::Interval(num(l, "length")?),
            ["rectangle", a, b] => DomainSpec::Rectangle(num(a, "side")?, num(b, "side")?),
            ["grid", n] => DomainSpec::Grid(
                n.parse().map_err(|_| PhidError::Invalid(format!("grid size '{n}' is not an integer")))?,
            ),
            _ => return Err(PhidError::Invalid(format!("unknown domain spec '{text}'"))),
        };
        Ok(d)
    }

    pub fn label(&self) -> String {
        match self {
            DomainSpec::Disk => "disk".into(),
            DomainSpec::Interval(l) => format!("interval_{l}"),
            DomainSpec::Rectangle(a, b) => format!("rectangle_{a}x{b}"),
            DomainSpec::Grid(n) => format!("grid_{n}"),
        }
    }

    /// Geometry whose node rule resolves products of the first `n_modes`
    /// eigenfunctions.
    pub fn geometry(&self, n_modes: usize) -> Result<DomainGeometry> {
        let root = (n_modes as f64).sqrt().ceil() as usize;
        match *self {
            DomainSpec::Disk => DomainGeometry::disk(disk_rule_for(n_modes)),
            DomainSpec::Interval(l) => DomainGeometry::interval(l, 2 * n_modes + 32),
            DomainSpec::Rectangle(a, b) => {
                let r = (a.max(b) / a.min(b)).sqrt();
                let m = ((4 * root + 16) as f64 * r).ceil() as usize;
                DomainGeometry::rectangle(a, b, m, m, 8 * root + 32)
            }
            DomainSpec::Grid(n) => DomainGeometry::grid_mask(GridMask::disk(n)),
        }
    }
}

impl std::fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DomainSpec::Disk => write!(f, "disk"),
            DomainSpec::Interval(l) => write!(f, "interval:{l}"),
            DomainSpec::Rectangle(a, b) => write!(f, "rectangle:{a}:{b}"),
            DomainSpec::Grid(n) => write!(f, "grid:{n}"),
        }
    }
}
