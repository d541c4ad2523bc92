//! Canned parameter studies, each producing one CSV table.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::arc::solve_arc;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::manufactured::evaluate;
use crate::partition::PartitionMap;
use crate::pipeline::{run_on, Problem};
use crate::solve::{direct_solve, stationary_solve_observed, Method, Mode, SolverConfig};
use crate::sparse::norm2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyName {
    ArcRobin,
    SphereConsistency,
    AlphaSweep,
    OverlapSweep,
    NsubSweep,
}

impl StudyName {
    pub const ALL: [StudyName; 5] = [
        StudyName::ArcRobin,
        StudyName::SphereConsistency,
        StudyName::AlphaSweep,
        StudyName::OverlapSweep,
        StudyName::NsubSweep,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StudyName::ArcRobin => "arc-robin",
            StudyName::SphereConsistency => "sphere-consistency",
            StudyName::AlphaSweep => "alpha-sweep",
            StudyName::OverlapSweep => "overlap-sweep",
            StudyName::NsubSweep => "nsub-sweep",
        }
    }
}

impl FromStr for StudyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StudyName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown study '{s}' (arc-robin, sphere-consistency, alpha-sweep, overlap-sweep, nsub-sweep)"
                ))
            })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let c = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c].as_str()).collect())
    }

    pub fn print(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for r in &self.rows {
            writeln!(out, "{}", r.join(","))?;
        }
        Ok(())
    }
}

/// Iteration count, or `DNC` for a diverged or unconverged run.
pub fn iteration_cell(
    problem: &Problem,
    pmap: &PartitionMap,
    f: &[f64],
    cfg: &SolverConfig,
) -> Result<String> {
    match run_on(problem, pmap, f, cfg, 0.0) {
        Ok(out) if out.log.converged => Ok(out.log.iterations.to_string()),
        Ok(_) => Ok("DNC".into()),
        Err(Error::Divergence { iteration, residual }) => {
            log::info!("{:?} diverged at iteration {iteration} (residual {residual:e})", cfg.method);
            Ok("DNC".into())
        }
        Err(e) => Err(e),
    }
}

fn problem_at(cfg: &RunConfig, h: f64) -> Result<(Problem, Vec<f64>)> {
    let surface = cfg.build_surface()?;
    let pb = Problem::build(surface, h, cfg.degree(), cfg.band, cfg.solver.c)?;
    let (f, _) = evaluate(&cfg.rhs, &pb.surface, &pb.grid, cfg.solver.c)?;
    Ok((pb, f))
}

fn with(cfg: &SolverConfig, method: Method, mode: Mode) -> SolverConfig {
    let mut c = cfg.clone();
    c.method = method;
    c.mode = mode;
    if mode == Mode::Gmres {
        c.max_iter = cfg.max_iter.min(2000);
    }
    c
}

fn fmt_h(h: f64) -> String {
    let inv = 1.0 / h;
    if (inv - inv.round()).abs() < 1e-9 {
        format!("1/{}", inv.round() as u64)
    } else {
        format!("{h}")
    }
}

fn fmt_alpha(a: f64) -> String {
    if a.is_infinite() {
        "inf".into()
    } else {
        format!("{a}")
    }
}

const MODES: [(Mode, &str); 2] = [(Mode::Stationary, "solver"), (Mode::Gmres, "preconditioner")];

/// Open arc with a Dirichlet and a Robin end: ∞-norm error per spacing.
pub fn arc_robin(cfg: &RunConfig) -> Result<Table> {
    let hs = cfg
        .sweep_h
        .clone()
        .unwrap_or_else(|| vec![1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0]);
    let mut t = Table::new(["h", "n_active", "error_inf", "ratio"].map(String::from).to_vec());
    let mut prev: Option<f64> = None;
    for h in hs {
        let r = solve_arc(h, 1.0)?;
        t.rows.push(vec![
            fmt_h(h),
            r.n_active.to_string(),
            format!("{:.4e}", r.error_inf),
            prev.map(|p| format!("{:.3}", p / r.error_inf)).unwrap_or_default(),
        ]);
        prev = Some(r.error_inf);
    }
    Ok(t)
}

/// Difference between the stationary DD iterates and the direct solution.
pub fn sphere_consistency(cfg: &RunConfig) -> Result<Table> {
    let (pb, f) = problem_at(cfg, cfg.h)?;
    let (_, exact) = evaluate(&cfg.rhs, &pb.surface, &pb.grid, cfg.solver.c)?;
    let a = &pb.ops.helmholtz;
    let direct = direct_solve(a, &f)?;
    if let Some(ex) = &exact {
        let e = direct.iter().zip(ex).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        log::info!("direct solve: ∞-norm error vs exact solution {e:.4e}");
    }
    let dn = norm2(&direct);
    let pmap = pb.partition(cfg.solver.n_sub, cfg.solver.seed)?;
    let mut columns = Vec::new();
    for method in [Method::Ras, Method::Oras] {
        let scfg = with(&cfg.solver, method, Mode::Stationary);
        let dd = pb.decomposition(&pmap, &scfg)?;
        let mut hist = Vec::new();
        let res = stationary_solve_observed(a, &f, &dd, scfg.rel_tol, scfg.max_iter, |_, u| {
            let d: f64 = u.iter().zip(&direct).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            hist.push(d);
        });
        match res {
            Ok((_, log)) if !log.converged => hist.push(f64::NAN),
            Err(Error::Divergence { .. }) => hist.push(f64::NAN),
            Err(e) => return Err(e),
            Ok(_) => {}
        }
        columns.push(hist);
    }
    let mut t = Table::new(
        ["iter", "ras_diff", "oras_diff", "ras_rel_diff", "oras_rel_diff"]
            .map(String::from)
            .to_vec(),
    );
    let n = columns.iter().map(Vec::len).max().unwrap_or(0);
    let cell = |v: Option<&f64>, scale: f64| match v {
        Some(x) if x.is_nan() => "DNC".to_string(),
        Some(x) => format!("{:.6e}", x / scale),
        None => String::new(),
    };
    for i in 0..n {
        t.rows.push(vec![
            (i + 1).to_string(),
            cell(columns[0].get(i), 1.0),
            cell(columns[1].get(i), 1.0),
            cell(columns[0].get(i), dn),
            cell(columns[1].get(i), dn),
        ]);
    }
    Ok(t)
}

/// Iterations against the Robin weight (columns) and spacing (rows), for
/// the solver and the preconditioner; `inf` is a genuine RAS run.
pub fn alpha_sweep(cfg: &RunConfig) -> Result<Table> {
    let hs = cfg.sweep_h.clone().unwrap_or_else(|| vec![cfg.h]);
    let mut header = vec!["mode".to_string(), "h".to_string()];
    header.extend(cfg.sweep_alpha.iter().map(|&a| fmt_alpha(a)));
    let mut blocks: Vec<Vec<Vec<String>>> = vec![Vec::new(), Vec::new()];
    for &h in &hs {
        let (pb, f) = problem_at(cfg, h)?;
        let pmap = pb.partition(cfg.solver.n_sub, cfg.solver.seed)?;
        for (b, (mode, name)) in MODES.iter().enumerate() {
            let mut row = vec![name.to_string(), fmt_h(h)];
            for &alpha in &cfg.sweep_alpha {
                let mut scfg = if alpha.is_infinite() {
                    with(&cfg.solver, Method::Ras, *mode)
                } else {
                    with(&cfg.solver, Method::Oras, *mode)
                };
                if alpha.is_finite() {
                    scfg.alpha = alpha;
                    scfg.alpha_cross = cfg.cross_factor * alpha;
                }
                row.push(iteration_cell(&pb, &pmap, &f, &scfg)?);
            }
            blocks[b].push(row);
        }
    }
    let mut t = Table::new(header);
    t.rows = blocks.concat();
    Ok(t)
}

fn method_sweep(
    cfg: &RunConfig,
    label: &str,
    values: &[usize],
    apply: impl Fn(&mut SolverConfig, usize),
    partition_per_value: bool,
) -> Result<Table> {
    let (pb, f) = problem_at(cfg, cfg.h)?;
    let mut header = vec!["mode".to_string()];
    for v in values {
        header.push(format!("ras_{label}{v}"));
        header.push(format!("oras_{label}{v}"));
    }
    let shared = if partition_per_value {
        None
    } else {
        Some(pb.partition(cfg.solver.n_sub, cfg.solver.seed)?)
    };
    let mut rows: Vec<Vec<String>> = MODES.iter().map(|(_, n)| vec![n.to_string()]).collect();
    for &v in values {
        let mut base = cfg.solver.clone();
        apply(&mut base, v);
        let pmap = match &shared {
            Some(p) => p.clone(),
            None => pb.partition(base.n_sub, base.seed)?,
        };
        for (r, (mode, _)) in MODES.iter().enumerate() {
            for method in [Method::Ras, Method::Oras] {
                rows[r].push(iteration_cell(&pb, &pmap, &f, &with(&base, method, *mode))?);
            }
        }
    }
    let mut t = Table::new(header);
    t.rows = rows;
    Ok(t)
}

/// Iterations against the overlap width.
pub fn overlap_sweep(cfg: &RunConfig) -> Result<Table> {
    method_sweep(cfg, "no", &cfg.sweep_overlap, |c, v| c.n_overlap = v, false)
}

/// Iterations against the subdomain count.
pub fn nsub_sweep(cfg: &RunConfig) -> Result<Table> {
    method_sweep(cfg, "ns", &cfg.sweep_nsub, |c, v| c.n_sub = v, true)
}

pub fn run_study(name: StudyName, cfg: &RunConfig) -> Result<Table> {
    match name {
        StudyName::ArcRobin => arc_robin(cfg),
        StudyName::SphereConsistency => sphere_consistency(cfg),
        StudyName::AlphaSweep => alpha_sweep(cfg),
        StudyName::OverlapSweep => overlap_sweep(cfg),
        StudyName::NsubSweep => nsub_sweep(cfg),
    }
}
