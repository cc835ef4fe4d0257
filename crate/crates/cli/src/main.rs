use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use phid::cache;
use phid::geometry::Point;
use phid::kernels::{KernelSet, Route};
use phid::mc::{
    estimate_green_potential, poisson_kernel_fn, spectral_reference, verify_mean_value, Ball, Integrand, OracleRow,
    PathConfig,
};
use phid::model::{NodeModel, PolarFvModel, SpectralModel};
use phid::potentials::{
    green_potential, poisson_integral, profile_csv, u_profile_bound, weak_boundary_trace, BoundaryMeasure,
    InteriorMeasure, ProfileQuadrature, UKind, UProfile,
};
use phid::solvers::{
    bracket_solve, solve_linear, solve_monotone, solve_nonpositive, solve_signed, Nonlinearity, ProblemSpec, Profile,
};
use phid::spectrum::build_spectrum;
use phid::{PhidError, Result};
use phid_cli::catalog::{catalog, default_config};
use phid_cli::checks::interior_pairs;
use phid_cli::config::ExperimentConfig;
use phid_cli::context::Context;
use phid_cli::specs::{parse_phi, DomainSpec};

#[derive(Parser)]
#[command(name = "phid", version, about = "Numerics for φ(−Δ|_D) on model domains")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// φ spec: stable:S, log_stable:S:R, stable_sum:W@S+W@S, classical.
    #[arg(long, default_value = "stable:0.5")]
    phi: String,
    /// Domain spec: disk, interval:L, rectangle:A:B, grid:N.
    #[arg(long, default_value = "disk")]
    domain: String,
    #[arg(long = "n-modes", default_value_t = 400)]
    n_modes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; results go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Spectrum cache directory.
    #[arg(long)]
    cache: Option<PathBuf>,
}

impl Common {
    fn domain(&self) -> Result<DomainSpec> {
        DomainSpec::parse(&self.domain)
    }

    fn kernels(&self) -> Result<Arc<KernelSet>> {
        Context::new(self.cache.clone()).kernels(&self.domain()?, self.n_modes, &parse_phi(&self.phi)?)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Build or verify a Dirichlet spectrum.
    Spectrum {
        #[command(subcommand)]
        cmd: SpectrumCmd,
    },
    /// Kernel identities and sharp-bound bands.
    Kernels {
        #[command(subcommand)]
        cmd: KernelsCmd,
    },
    /// Boundary traces and U-profile bounds.
    Potentials {
        #[command(subcommand)]
        cmd: PotentialsCmd,
    },
    /// Linear and semilinear solvers.
    Solve {
        #[arg(value_enum)]
        kind: SolveKind,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Monte Carlo cross-checks.
    Oracle {
        #[command(subcommand)]
        cmd: OracleCmd,
    },
    /// Catalog experiments.
    Experiment {
        #[command(subcommand)]
        cmd: ExperimentCmd,
    },
}

#[derive(Subcommand)]
enum SpectrumCmd {
    Build {
        #[command(flatten)]
        common: Common,
    },
    Verify {
        #[command(flatten)]
        common: Common,
        /// Verify this cache file instead of building.
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum KernelsCmd {
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        pairs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Datum {
    /// Poisson integral of ζ = 2 + cos θ.
    Poisson,
    /// Green potential of λ ≡ 1.
    Green,
}

#[derive(Subcommand)]
enum PotentialsCmd {
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "poisson")]
        datum: Datum,
        #[arg(long, default_value_t = 0.1)]
        t: f64,
    },
    Profile {
        #[command(flatten)]
        common: Common,
        /// U(t) = t^(−beta); beta = 0 gives U ≡ 1.
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        #[arg(long, default_value_t = 8)]
        points: usize,
        #[arg(long, default_value_t = 1e-3)]
        floor: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveKind {
    Linear,
    Monotone,
    Nonpositive,
    Signed,
    Bracket,
}

#[derive(Args)]
struct SolveOpts {
    #[command(flatten)]
    common: Common,
    /// Power p in f = m·t^p (or −t^p for nonpositive and bracket).
    #[arg(long, default_value_t = 1.5)]
    p: f64,
    #[arg(long, default_value_t = 0.1)]
    m: f64,
    /// Use the spectral node model instead of the polar finite-volume model.
    #[arg(long)]
    spectral: bool,
    #[arg(long, default_value_t = 64)]
    radial: usize,
    #[arg(long, default_value_t = 128)]
    angular: usize,
}

#[derive(Subcommand)]
enum OracleCmd {
    Green {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        /// Evaluation point "x,y".
        #[arg(long, default_value = "0,0")]
        x: String,
    },
    Meanvalue {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
    },
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// List catalog experiments and their checks.
    List,
    Run {
        id: String,
        /// JSON config file; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        domain: Option<String>,
        #[arg(long = "n-modes")]
        n_modes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Tolerance override KEY=VALUE, repeatable.
        #[arg(long = "tol")]
        tol: Vec<String>,
        /// Run independent checks concurrently.
        #[arg(long)]
        concurrent: bool,
    },
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>, name: &str) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), text)?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn point(text: &str) -> Result<Point> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| PhidError::Invalid(format!("point '{text}' is not x,y")))?;
    match v.as_slice() {
        [x] => Ok([*x, 0.0]),
        [x, y] => Ok([*x, *y]),
        _ => Err(PhidError::Invalid(format!("point '{text}' is not x,y"))),
    }
}

#[derive(Serialize)]
struct SpectrumSummary {
    domain: String,
    n_modes: usize,
    n_nodes: usize,
    lambda_first: Vec<f64>,
    gram_defect: f64,
    weyl_band: f64,
    sup_norm_constant: f64,
}

fn summarize(domain: &str, s: &phid::spectrum::Spectrum) -> SpectrumSummary {
    SpectrumSummary {
        domain: domain.into(),
        n_modes: s.len(),
        n_nodes: s.geom.n_nodes(),
        lambda_first: s.lambdas.iter().take(5).copied().collect(),
        gram_defect: s.gram_defect(),
        weyl_band: s.verify_weyl().width(),
        sup_norm_constant: s.sup_norm_constant(),
    }
}

fn spectrum_cmd(cmd: SpectrumCmd) -> Result<bool> {
    match cmd {
        SpectrumCmd::Build { common } => {
            let d = common.domain()?;
            let s = build_spectrum(d.geometry(common.n_modes)?, common.n_modes)?;
            if let Some(dir) = &common.cache {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("{}_n{}.phidspec", d.label(), common.n_modes));
                cache::save(&s, &path)?;
                eprintln!("wrote {}", path.display());
            }
            emit(&summarize(&d.label(), &s), common.out.as_deref(), "spectrum.json")?;
            Ok(true)
        }
        SpectrumCmd::Verify { common, file } => {
            let (label, s) = match file {
                Some(p) => (p.display().to_string(), cache::load(&p)?),
                None => {
                    let d = common.domain()?;
                    (d.label(), build_spectrum(d.geometry(common.n_modes)?, common.n_modes)?)
                }
            };
            let sum = summarize(&label, &s);
            let ok = sum.gram_defect <= 1e-6;
            emit(&sum, common.out.as_deref(), "spectrum_verify.json")?;
            Ok(ok)
        }
    }
}

#[derive(Serialize)]
struct KernelSummary {
    factorization_mode_defect: f64,
    green_poisson_mode_defect: f64,
    factorization: phid::kernels::FactorizationReport,
    two_route: Vec<[f64; 6]>,
}

fn kernels_cmd(cmd: KernelsCmd) -> Result<bool> {
    let KernelsCmd::Verify { common, pairs } = cmd;
    let ks = common.kernels()?;
    let ps = interior_pairs(&ks.spectrum.geom, pairs, 0.2, 0.2, common.seed);
    let factorization = ks.verify_factorization(&ps)?;
    let mut two_route = vec![];
    for &(x, y) in &ps {
        let a = ks.green_phi(x, y, Route::Spectral)?;
        let b = ks.green_phi(x, y, Route::Subordination)?;
        two_route.push([x[0], x[1], y[0], y[1], a, b]);
    }
    let sum = KernelSummary {
        factorization_mode_defect: ks.factorization_mode_defect(),
        green_poisson_mode_defect: ks.green_poisson_mode_defect(),
        factorization,
        two_route,
    };
    let ok = sum.factorization_mode_defect <= 1e-12;
    emit(&sum, common.out.as_deref(), "kernels_verify.json")?;
    Ok(ok)
}

fn potentials_cmd(cmd: PotentialsCmd) -> Result<bool> {
    match cmd {
        PotentialsCmd::Trace { common, datum, t } => {
            let ks = common.kernels()?;
            let g = &ks.spectrum.geom;
            let rep = match datum {
                Datum::Poisson => {
                    let pz = poisson_integral(&ks, &BoundaryMeasure::from_fn(g, |b| 2.0 + b.z[0]))?;
                    weak_boundary_trace(&ks, &|x| pz.at(&ks, x), t, &|_| 1.0)?
                }
                Datum::Green => {
                    let gp = green_potential(&ks, &InteriorMeasure::from_fn(g, |_| 1.0))?;
                    weak_boundary_trace(&ks, &|x| gp.at(&ks, x), t, &|_| 1.0)?
                }
            };
            emit(&rep, common.out.as_deref(), "trace.json")?;
            Ok(true)
        }
        PotentialsCmd::Profile { common, beta, points, floor } => {
            let ks = common.kernels()?;
            let g = &ks.spectrum.geom;
            let kind = if beta == 0.0 { UKind::Bounded { c: 1.0 } } else { UKind::Power { beta } };
            let prof = UProfile::new(kind)?;
            let ray = g.normal_ray(&g.boundary[0], points, floor);
            let rows = ray
                .iter()
                .map(|&x| u_profile_bound(&ks, &prof, x, ProfileQuadrature::default()))
                .collect::<Result<Vec<_>>>()?;
            match &common.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join("profile.csv"), profile_csv(&rows))?;
                }
                None => print!("{}", profile_csv(&rows)),
            }
            Ok(true)
        }
    }
}

fn solve_cmd(kind: SolveKind, o: SolveOpts) -> Result<bool> {
    let model: Box<dyn NodeModel> = if o.spectral {
        Box::new(SpectralModel::new(o.common.kernels()?))
    } else {
        Box::new(PolarFvModel::new(&parse_phi(&o.common.phi)?, o.radial, o.angular, 2.0)?)
    };
    let ns = model.node_set().clone();
    let sigma = vec![1.0; ns.boundary.len()];
    let rep = match kind {
        SolveKind::Linear => solve_linear(model.as_ref(), &ProblemSpec::new(Nonlinearity::new(Profile::Zero, 0.0)?, sigma))?,
        SolveKind::Monotone => {
            let f = Nonlinearity::new(Profile::Power { p: o.p }, o.m)?;
            solve_monotone(model.as_ref(), &ProblemSpec::new(f, sigma))?
        }
        SolveKind::Nonpositive => {
            let f = Nonlinearity::new(Profile::Absorption { p: o.p }, 1.0)?;
            solve_nonpositive(model.as_ref(), &ProblemSpec::new(f, sigma))?
        }
        SolveKind::Signed => {
            let zeta = ns.boundary_values(|b| b.z[0]);
            let f = Nonlinearity::new(Profile::Sine, 1.0)?;
            solve_signed(model.as_ref(), &ProblemSpec::new(f, zeta), o.common.seed)?
        }
        SolveKind::Bracket => {
            let f = Nonlinearity::new(Profile::Absorption { p: o.p }, 1.0)?;
            // u = P_φσ is a supersolution (h = 0); G_φf(P_φσ) + P_φσ a subsolution
            let h_lo = f.apply(model.poisson_sigma());
            let h_hi = vec![0.0; h_lo.len()];
            bracket_solve(model.as_ref(), &ProblemSpec::new(f, sigma), &h_lo, &h_hi)?
        }
    };
    let ok = rep.converged;
    emit(&rep, o.common.out.as_deref(), "solve.json")?;
    Ok(ok)
}

fn oracle_cmd(cmd: OracleCmd) -> Result<bool> {
    match cmd {
        OracleCmd::Green { common, paths, x } => {
            let phi = parse_phi(&common.phi)?;
            let ks = common.kernels()?;
            let pc = PathConfig::for_spec(&phi, paths, common.seed)?;
            let x = point(&x)?;
            let f = Integrand::Bump { center: [0.0, 0.0], radius: 0.6 };
            let est = estimate_green_potential(&pc, &ks, x, &f)?;
            let row = OracleRow::new(x, f.id(), &est, spectral_reference(&ks, &f, x));
            let ok = row.z_score.abs() <= 3.0;
            emit(&row, common.out.as_deref(), "oracle_green.json")?;
            Ok(ok)
        }
        OracleCmd::Meanvalue { common, paths } => {
            let phi = parse_phi(&common.phi)?;
            let ks = common.kernels()?;
            let pc = PathConfig::for_spec(&phi, paths, common.seed)?;
            let h = poisson_kernel_fn(&ks, ks.spectrum.geom.boundary[0])?;
            let rep = verify_mean_value(&pc, &ks, &h, Ball { center: [-0.2, 0.0], radius: 0.5 }, [-0.1, 0.1])?;
            let ok = rep.defect <= 3.0 * rep.se;
            emit(&rep, common.out.as_deref(), "oracle_meanvalue.json")?;
            Ok(ok)
        }
    }
}

fn experiment_cmd(cmd: ExperimentCmd) -> Result<bool> {
    match cmd {
        ExperimentCmd::List => {
            for e in catalog() {
                let names: Vec<&str> = e.checks.iter().map(|c| c.name.as_str()).collect();
                println!("{:<5} {:<40} {}", e.id, e.title, names.join(" "));
            }
            Ok(true)
        }
        ExperimentCmd::Run { id, config, phi, domain, n_modes, seed, out, cache, tol, concurrent } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::load(&p)?,
                None => default_config(&id)?,
            };
            if !cfg.id.eq_ignore_ascii_case(&id) {
                return Err(PhidError::Invalid(format!("config is for {} but {id} was requested", cfg.id)));
            }
            if let Some(v) = phi {
                cfg.phi = v;
            }
            if let Some(v) = domain {
                cfg.domain = v;
            }
            if let Some(v) = n_modes {
                cfg.n_modes = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if out.is_some() {
                cfg.out_dir = out;
            }
            if cache.is_some() {
                cfg.cache_dir = cache;
            }
            cfg.override_tolerances(&tol)?;
            cfg.validate()?;
            let out_dir = cfg
                .out_dir
                .clone()
                .or_else(|| std::env::var_os("PHID_OUT").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("phid-out"));
            let mut ctx = Context::new(cfg.cache_dir.clone());
            let report = phid_cli::run(&cfg, &mut ctx, concurrent, |c| println!("{}", c.line()))?;
            for p in report.write(&out_dir)? {
                eprintln!("wrote {}", p.display());
            }
            Ok(!report.any_fail())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Spectrum { cmd } => spectrum_cmd(cmd),
        Cmd::Kernels { cmd } => kernels_cmd(cmd),
        Cmd::Potentials { cmd } => potentials_cmd(cmd),
        Cmd::Solve { kind, opts } => solve_cmd(kind, opts),
        Cmd::Oracle { cmd } => oracle_cmd(cmd),
        Cmd::Experiment { cmd } => experiment_cmd(cmd),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
