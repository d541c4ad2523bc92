//! End-to-end wiring: band → operators → partition → subdomains → solve.

use std::time::Instant;

use crate::band::{BandGrid, BandMode};
use crate::error::Result;
use crate::geometry::Surface;
use crate::operators::Operators;
use crate::partition::{align_interfaces, build_graph, partition_graph, NodeGraph, PartitionMap};
use crate::solve::{solve_with, DomainDecomposition, IterationLog, Method, Mode, SolverConfig};
use crate::subdomain::{build_subdomains, Subdomain};

/// A discretized surface problem.
pub struct Problem {
    pub surface: Surface,
    pub grid: BandGrid,
    pub ops: Operators,
    pub graph: NodeGraph,
    pub band_seconds: f64,
    pub matrix_seconds: f64,
}

impl Problem {
    pub fn build(surface: Surface, h: f64, p: usize, mode: BandMode, c: f64) -> Result<Self> {
        let t = Instant::now();
        let grid = BandGrid::build(&surface, h, p, mode)?;
        for w in &grid.warnings {
            log::warn!("{w}");
        }
        let graph = build_graph(&grid);
        let band_seconds = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let ops = Operators::build(&grid, c)?;
        let matrix_seconds = t.elapsed().as_secs_f64();
        log::info!(
            "band: {} active, {} ghost nodes; A has {} nonzeros",
            grid.n_active(),
            grid.n_ghost(),
            ops.helmholtz.nnz()
        );
        Ok(Problem {
            surface,
            grid,
            ops,
            graph,
            band_seconds,
            matrix_seconds,
        })
    }

    /// Graph partition followed by `p + 1` interface-alignment passes.
    pub fn partition(&self, n_sub: usize, seed: u64) -> Result<PartitionMap> {
        let raw = partition_graph(&self.graph, n_sub, seed)?;
        if n_sub == 1 {
            return Ok(raw);
        }
        align_interfaces(&self.grid, &self.graph, &raw, self.grid.p + 1)
    }

    pub fn subdomains(&self, pmap: &PartitionMap, n_overlap: usize, method: Method) -> Result<Vec<Subdomain>> {
        build_subdomains(
            &self.surface,
            &self.grid,
            &self.graph,
            pmap,
            n_overlap,
            method == Method::Oras,
        )
    }

    pub fn decomposition(&self, pmap: &PartitionMap, cfg: &SolverConfig) -> Result<DomainDecomposition> {
        let subs = self.subdomains(pmap, cfg.n_overlap, cfg.method)?;
        DomainDecomposition::new(&self.grid, &self.ops.helmholtz, self.ops.c, subs, &cfg.transmission()?, cfg.workers)
    }
}

pub struct RunOutcome {
    pub u: Vec<f64>,
    pub log: IterationLog,
}

/// Partition, build local operators and solve; the log carries the phase
/// timings (meshing includes partitioning).
pub fn run(problem: &Problem, f: &[f64], cfg: &SolverConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let t = Instant::now();
    let pmap = problem.partition(cfg.n_sub, cfg.seed)?;
    let meshing = problem.band_seconds + t.elapsed().as_secs_f64();
    run_on(problem, &pmap, f, cfg, meshing)
}

/// As [`run`] on a fixed partition.
pub fn run_on(
    problem: &Problem,
    pmap: &PartitionMap,
    f: &[f64],
    cfg: &SolverConfig,
    meshing_seconds: f64,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let t = Instant::now();
    let dd = problem.decomposition(pmap, cfg)?;
    let local = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let (u, mut log) = solve_with(&problem.ops.helmholtz, f, &dd, cfg)?;
    let solve = t.elapsed().as_secs_f64();
    let solve_phase = match cfg.mode {
        Mode::Stationary => "solver",
        Mode::Gmres => "preconditioned_solve",
    };
    log.phases = vec![
        ("meshing".into(), meshing_seconds),
        ("global_matrix".into(), problem.matrix_seconds),
        ("local_operators".into(), local),
        (solve_phase.into(), solve),
    ];
    log::info!(
        "{:?}/{:?}: {} iterations, converged = {}",
        cfg.method,
        cfg.mode,
        log.iterations,
        log.converged
    );
    Ok(RunOutcome { u, log })
}
