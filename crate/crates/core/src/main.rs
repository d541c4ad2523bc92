use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cpmdd::cli::{cmd_mesh, cmd_solve, cmd_study, exit_code, EXIT_CONFIG};
use cpmdd::config::RunConfig;
use cpmdd::study::StudyName;
use cpmdd::Result;

/// Closest point method surface Helmholtz solver with (O)RAS domain
/// decomposition.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the file and the flags.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the band and write its statistics.
    Mesh,
    /// Partition, build local problems and solve.
    Solve,
    /// Run a named parameter study.
    Study {
        /// arc-robin, sphere-consistency, alpha-sweep, overlap-sweep or nsub-sweep
        name: String,
    },
}

#[derive(Args)]
struct Flags {
    /// circle, arc, sphere, torus or mesh
    #[arg(long, global = true)]
    surface: Option<String>,
    /// OBJ file for `surface = mesh`.
    #[arg(long, global = true)]
    mesh: Option<String>,
    /// Grid spacing (fractions such as 1/50 are accepted).
    #[arg(long, global = true)]
    h: Option<String>,
    /// Interpolation degree.
    #[arg(long, global = true)]
    p: Option<String>,
    /// tube or algorithmic
    #[arg(long, global = true)]
    band: Option<String>,
    #[arg(long, global = true)]
    c: Option<String>,
    /// manufactured[:k], linear, constant:<v> or file:<path>
    #[arg(long, global = true)]
    rhs: Option<String>,
    /// ras or oras
    #[arg(long, global = true)]
    method: Option<String>,
    /// stationary or gmres
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true)]
    rel_tol: Option<String>,
    #[arg(long, global = true)]
    max_iter: Option<String>,
    #[arg(long, global = true)]
    restart: Option<String>,
    /// Number of subdomains.
    #[arg(long, global = true)]
    n_sub: Option<String>,
    /// Overlap layers.
    #[arg(long, global = true)]
    n_overlap: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    #[arg(long, global = true)]
    alpha_cross: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Upper bound on solve-phase threads.
    #[arg(long, global = true)]
    workers: Option<String>,
    /// Output directory.
    #[arg(long, short, global = true)]
    output: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("surface", &self.surface),
            ("mesh_path", &self.mesh),
            ("h", &self.h),
            ("p", &self.p),
            ("band", &self.band),
            ("c", &self.c),
            ("rhs", &self.rhs),
            ("method", &self.method),
            ("mode", &self.mode),
            ("rel_tol", &self.rel_tol),
            ("max_iter", &self.max_iter),
            ("restart", &self.restart),
            ("n_sub", &self.n_sub),
            ("n_overlap", &self.n_overlap),
            ("alpha", &self.alpha),
            ("alpha_cross", &self.alpha_cross),
            ("seed", &self.seed),
            ("workers", &self.workers),
            ("output", &self.output),
        ]
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for (key, value) in cli.flags.pairs() {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| cpmdd::Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k, v)?;
    }
    cfg.finalize()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Mesh => {
            let grid = cmd_mesh(&cfg)?;
            println!("active {}, ghost {}", grid.n_active(), grid.n_ghost());
        }
        Command::Solve => {
            let s = cmd_solve(&cfg)?;
            println!(
                "iterations {}, converged {}, relative residual {:.3e}{}",
                s.iterations,
                s.converged,
                s.relative_residual,
                s.error_inf.map(|e| format!(", max error vs exact {e:.4e}")).unwrap_or_default()
            );
        }
        Command::Study { name } => {
            let name: StudyName = name.parse()?;
            let path = cmd_study(name, &cfg)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
