use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use toroidal_cli::commands;
use toroidal_cli::config::RunConfig;
use toroidal_cli::report::ProfileCache;

#[derive(Parser)]
#[command(name = "toroidal", version, about = "Toroidal surfaces with prescribed mean curvature")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Default)]
struct Common {
    #[arg(long = "A", allow_hyphen_values = true)]
    amp: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long)]
    n_theta: Option<usize>,
    #[arg(long)]
    tol_fp: Option<f64>,
    #[arg(long)]
    tol_match: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    anderson: Option<usize>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the closed mesh here (.obj or .ply).
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Write the solution field here.
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate the unduloid profile and report τ_a, h_a.
    Profile(Common),
    /// Build the bent torus and report mean-curvature statistics.
    Surface(Common),
    /// Run the reduction fixed point at fixed (n, a).
    Solve(Common),
    /// Find the matched neck size a_n and certify the result.
    Match(Common),
    /// Re-run the embeddedness certificate on a saved solution.
    Certify {
        solution: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        r0: f64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Export the closed mesh of a saved solution.
    Export {
        solution: PathBuf,
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Selftest {
        /// Comma-separated criterion numbers.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        verbose: bool,
    },
}

fn build_config(path: Option<&PathBuf>, c: Common, fixed_a: bool) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(v) = c.$f { cfg.$f = v; })* };
    }
    set!(amp, gamma, n_t, n_theta, tol_fp, tol_match, max_iter, anderson, r0, seed);
    if c.beta.is_some() {
        cfg.beta = c.beta;
    }
    if c.a.is_some() {
        cfg.a = c.a;
        cfg.auto_match = false;
    } else if fixed_a && cfg.a.is_none() {
        anyhow::bail!("--a is required");
    }
    if c.n.is_some() {
        cfg.n = c.n;
        cfg.eps = None;
    }
    if c.eps.is_some() {
        cfg.eps = c.eps;
        cfg.n = None;
    }
    cfg.output.report = c.report.or(cfg.output.report);
    cfg.output.mesh = c.mesh.or(cfg.output.mesh);
    cfg.output.solution = c.solution.or(cfg.output.solution);
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    let cache = ProfileCache::from_env();
    let cfg_path = cli.config.as_ref();
    let report = match cli.cmd {
        Cmd::Profile(c) => commands::profile(&build_config(cfg_path, c, true)?, &cache)?,
        Cmd::Surface(c) => commands::surface(&build_config(cfg_path, c, true)?, &cache)?,
        Cmd::Solve(c) => commands::solve(&build_config(cfg_path, c, true)?, &cache)?,
        Cmd::Match(c) => {
            let mut cfg = build_config(cfg_path, c, false)?;
            cfg.a = None;
            cfg.auto_match = true;
            cfg.validate()?;
            commands::matching(&cfg, &cache)?
        }
        Cmd::Certify { solution, r0, report } => commands::certify_saved(&solution, r0, report.as_ref(), &cache)?,
        Cmd::Export { solution, mesh, report } => commands::export(&solution, &mesh, report.as_ref(), &cache)?,
        Cmd::Selftest { only, seed, verbose } => {
            let outcomes = commands::selftest(seed, &only, |o| {
                println!("{}", o.line());
                if verbose || !o.passed {
                    for d in &o.details {
                        println!("    {d}");
                    }
                }
            });
            let passed = outcomes.iter().filter(|o| o.passed).count();
            println!("acceptance: {passed}/{} criteria passed", outcomes.len());
            return Ok(passed == outcomes.len());
        }
    };
    let _ = writeln!(std::io::stdout(), "{}", report.to_json());
    Ok(report.certificate.map_or(true, |c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let kind = if e.downcast_ref::<toroidal_cli::config::ConfigError>().is_some() {
                "config"
            } else if e.downcast_ref::<toroidal::Error>().is_some() {
                "numerics"
            } else if e.downcast_ref::<std::io::Error>().is_some() {
                "io"
            } else {
                "other"
            };
            let rec = serde_json::json!({ "error": { "kind": kind, "message": format!("{e:#}") } });
            eprintln!("{rec}");
            ExitCode::from(2)
        }
    }
}
