//! Subcommand implementations and exit-code mapping.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::band::{band_stats, write_nodes, write_stats, BandGrid};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::manufactured::evaluate;
use crate::pipeline::{run, Problem};
use crate::solve::reconstruct_and_check;
use crate::study::{run_study, StudyName};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidSurface(_) => EXIT_CONFIG,
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        Error::Io { .. } | Error::Parse { .. } | Error::Csv(_) => EXIT_IO,
        _ => EXIT_FAILURE,
    }
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output).map_err(|e| Error::io(&cfg.output, e))?;
    Ok(cfg.output.clone())
}

/// Band construction only: `mesh_stats.csv` and `mesh_nodes.csv`.
pub fn cmd_mesh(cfg: &RunConfig) -> Result<BandGrid> {
    let surface = cfg.build_surface()?;
    let grid = BandGrid::build(&surface, cfg.h, cfg.degree(), cfg.band)?;
    for w in &grid.warnings {
        log::warn!("{w}");
    }
    let dir = output_dir(cfg)?;
    write_stats(&dir.join("mesh_stats.csv"), &band_stats(&grid))?;
    write_nodes(&dir.join("mesh_nodes.csv"), &grid)?;
    Ok(grid)
}

pub fn write_solution(path: &Path, grid: &BandGrid, u: &[f64]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "x,y,z,u").map_err(io)?;
    for (n, v) in grid.active().iter().zip(u) {
        let x = n.x.0;
        writeln!(w, "{},{},{},{:e}", x[0], x[1], x[2], v).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Clone, Debug)]
pub struct SolveSummary {
    pub iterations: usize,
    pub converged: bool,
    pub relative_residual: f64,
    pub error_inf: Option<f64>,
}

/// Full pipeline: `solution.csv`, `iterations.csv`, `timings.csv`.
pub fn cmd_solve(cfg: &RunConfig) -> Result<SolveSummary> {
    let dir = output_dir(cfg)?;
    let surface = cfg.build_surface()?;
    let pb = Problem::build(surface, cfg.h, cfg.degree(), cfg.band, cfg.solver.c)?;
    let (f, exact) = evaluate(&cfg.rhs, &pb.surface, &pb.grid, cfg.solver.c)?;
    let out = run(&pb, &f, &cfg.solver)?;
    write_solution(&dir.join("solution.csv"), &pb.grid, &out.u)?;
    out.log.write_csv(&dir.join("iterations.csv"))?;
    out.log.write_timings(&dir.join("timings.csv"))?;
    let report = reconstruct_and_check(&out.u, &pb.ops.helmholtz, &f, None, exact.as_deref());
    if !out.log.converged {
        log::warn!(
            "no convergence within {} iterations (relative residual {:.3e})",
            cfg.solver.max_iter,
            report.relative_residual
        );
    }
    Ok(SolveSummary {
        iterations: out.log.iterations,
        converged: out.log.converged,
        relative_residual: report.relative_residual,
        error_inf: report.error_exact_inf,
    })
}

/// Run a named study and write `study_<name>.csv`.
pub fn cmd_study(name: StudyName, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = output_dir(cfg)?;
    let table = run_study(name, cfg)?;
    let path = dir.join(format!("study_{}.csv", name.as_str()));
    table.write_csv(&path)?;
    table
        .print(std::io::stdout().lock())
        .map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
