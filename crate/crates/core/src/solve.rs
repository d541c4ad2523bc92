//! Stationary (O)RAS iteration and right-preconditioned GMRES with
//! `M⁻¹ = Σ_j R̃_jᵀ A_j⁻¹ R_j`.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band::BandGrid;
use crate::error::{Error, Result};
use crate::lu::SparseLu;
use crate::sparse::{dot, norm2, SparseOperator};
use crate::subdomain::Subdomain;
use crate::transmission::{assemble_local, LocalOperator, TransmissionSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ras,
    Oras,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Stationary,
    Gmres,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub mode: Mode,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub gmres_restart: Option<usize>,
    pub c: f64,
    pub n_overlap: usize,
    pub n_sub: usize,
    pub alpha: f64,
    pub alpha_cross: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Oras,
            mode: Mode::Stationary,
            rel_tol: 1e-6,
            max_iter: 5000,
            gmres_restart: None,
            c: 1.0,
            n_overlap: 4,
            n_sub: 2,
            alpha: 1.0,
            alpha_cross: 1.0,
            seed: 0,
            workers: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Config(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if self.n_sub == 0 {
            return Err(Error::Config("number of subdomains must be at least 1".into()));
        }
        if self.n_overlap == 0 {
            return Err(Error::Config("overlap must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.gmres_restart == Some(0) {
            return Err(Error::Config("GMRES restart length must be at least 1".into()));
        }
        if !(self.c > 0.0) {
            return Err(Error::Config(format!("c must be positive, got {}", self.c)));
        }
        self.transmission().map(|_| ())
    }

    pub fn transmission(&self) -> Result<TransmissionSpec> {
        match self.method {
            Method::Ras => Ok(TransmissionSpec::dirichlet()),
            Method::Oras => TransmissionSpec::robin(self.alpha, self.alpha_cross),
        }
    }
}

/// Residual history and phase timings of one solve.
#[derive(Clone, Debug, Default)]
pub struct IterationLog {
    /// `‖f − A u⁽ⁿ⁾‖₂` for n = 0..=iterations.
    pub residuals: Vec<f64>,
    pub elapsed: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `(phase, seconds)` in pipeline order.
    pub phases: Vec<(String, f64)>,
}

impl IterationLog {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "iter,residual_2norm,elapsed_seconds").map_err(io)?;
        for (i, (r, t)) in self.residuals.iter().zip(&self.elapsed).enumerate() {
            writeln!(w, "{i},{r:e},{t}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn write_timings(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "phase,seconds").map_err(io)?;
        for (p, t) in &self.phases {
            writeln!(w, "{p},{t}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Factored local problems plus the thread pool that applies them.
pub struct DomainDecomposition {
    pub subdomains: Vec<Subdomain>,
    pub locals: Vec<LocalOperator>,
    pool: rayon::ThreadPool,
}

impl DomainDecomposition {
    /// Assemble and factor every local operator (concurrently, up to
    /// `workers` threads).
    pub fn new(
        grid: &BandGrid,
        helmholtz: &SparseOperator,
        c: f64,
        subdomains: Vec<Subdomain>,
        spec: &TransmissionSpec,
        workers: usize,
    ) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let locals = pool.install(|| {
            subdomains
                .par_iter()
                .map(|sub| {
                    let mut op = assemble_local(grid, helmholtz, c, sub, spec)?;
                    op.factor(sub.id)?;
                    Ok(op)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(DomainDecomposition {
            subdomains,
            locals,
            pool,
        })
    }

    /// Replace the thread pool, keeping the factorizations.
    pub fn set_workers(&mut self, workers: usize) -> Result<()> {
        self.pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(())
    }

    pub fn n_active(&self) -> usize {
        self.subdomains.iter().map(|s| s.disjoint.len()).sum()
    }

    /// `z = Σ_j R̃_jᵀ (A_j⁻¹ [R_j r ; 0])|_{Σ̃_j}`.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        let parts: Vec<Vec<f64>> = self.pool.install(|| {
            self.subdomains
                .par_iter()
                .zip(self.locals.par_iter())
                .map(|(sub, local)| {
                    let rj: Vec<f64> = sub.overlap.iter().map(|&i| r[i]).collect();
                    let zj = local.solve_interior(&rj)?;
                    Ok(sub.disjoint_local.iter().map(|&l| zj[l]).collect())
                })
                .collect::<Result<_>>()
        })?;
        let mut z = vec![0.0; r.len()];
        for (sub, part) in self.subdomains.iter().zip(parts) {
            for (&i, v) in sub.disjoint.iter().zip(part) {
                z[i] = v;
            }
        }
        Ok(z)
    }
}

/// Anything usable as `M⁻¹`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>>;
}

impl Preconditioner for DomainDecomposition {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        DomainDecomposition::apply(self, r)
    }
}

/// The identity (no preconditioning).
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(r.to_vec())
    }
}

pub fn apply_preconditioner(dd: &DomainDecomposition, r: &[f64]) -> Result<Vec<f64>> {
    dd.apply(r)
}

fn residual(a: &SparseOperator, f: &[f64], u: &[f64]) -> Vec<f64> {
    let au = a.spmv(u);
    f.iter().zip(&au).map(|(f, a)| f - a).collect()
}

fn check_divergence(iteration: usize, rn: f64, r0: f64) -> Result<()> {
    if !rn.is_finite() || rn > 1e8 * r0 {
        return Err(Error::Divergence {
            iteration,
            residual: rn,
        });
    }
    Ok(())
}

/// `u ← u + M⁻¹ (f − A u)` from `u⁰ = 0`.
pub fn stationary_solve(
    a: &SparseOperator,
    f: &[f64],
    m: &impl Preconditioner,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, IterationLog)> {
    stationary_solve_observed(a, f, m, rel_tol, max_iter, |_, _| {})
}

/// As [`stationary_solve`], calling `observe(n, uⁿ)` after every update.
pub fn stationary_solve_observed(
    a: &SparseOperator,
    f: &[f64],
    m: &impl Preconditioner,
    rel_tol: f64,
    max_iter: usize,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<(Vec<f64>, IterationLog)> {
    let start = Instant::now();
    let mut u = vec![0.0; f.len()];
    let mut r = f.to_vec();
    let r0 = norm2(&r);
    let mut log = IterationLog {
        residuals: vec![r0],
        elapsed: vec![0.0],
        ..Default::default()
    };
    if r0 == 0.0 {
        log.converged = true;
        return Ok((u, log));
    }
    for it in 1..=max_iter {
        let z = m.apply(&r)?;
        for (ui, zi) in u.iter_mut().zip(&z) {
            *ui += zi;
        }
        observe(it, &u);
        r = residual(a, f, &u);
        let rn = norm2(&r);
        log.residuals.push(rn);
        log.elapsed.push(start.elapsed().as_secs_f64());
        log.iterations = it;
        check_divergence(it, rn, r0)?;
        if rn <= rel_tol * r0 {
            log.converged = true;
            break;
        }
    }
    Ok((u, log))
}

/// Right-preconditioned GMRES (modified Gram–Schmidt Arnoldi, Givens
/// rotations), optionally restarted. The per-iteration log holds the
/// Arnoldi residual estimate; the final entry is the true residual.
pub fn gmres_solve(
    a: &SparseOperator,
    f: &[f64],
    m: &impl Preconditioner,
    rel_tol: f64,
    max_iter: usize,
    restart: Option<usize>,
) -> Result<(Vec<f64>, IterationLog)> {
    let start = Instant::now();
    let n = f.len();
    let mut x = vec![0.0; n];
    let beta0 = norm2(f);
    let mut log = IterationLog {
        residuals: vec![beta0],
        elapsed: vec![0.0],
        ..Default::default()
    };
    if beta0 == 0.0 {
        log.converged = true;
        return Ok((x, log));
    }
    let cycle = restart.unwrap_or(max_iter).max(1);
    let target = rel_tol * beta0;
    let mut r = f.to_vec();
    let mut total = 0;
    while total < max_iter {
        let beta = norm2(&r);
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        // Hessenberg columns, rotated in place
        let mut hcols: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = vec![beta];
        let mut steps = 0;
        let mut done = false;
        while steps < cycle && total < max_iter {
            let z = m.apply(&basis[steps])?;
            let mut w = a.spmv(&z);
            let mut hcol = Vec::with_capacity(steps + 2);
            for v in &basis {
                let hij = dot(&w, v);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= hij * vi;
                }
                hcol.push(hij);
            }
            let hnext = norm2(&w);
            hcol.push(hnext);
            for k in 0..steps {
                let (a0, a1) = (hcol[k], hcol[k + 1]);
                hcol[k] = cs[k] * a0 + sn[k] * a1;
                hcol[k + 1] = -sn[k] * a0 + cs[k] * a1;
            }
            let (p, q) = (hcol[steps], hcol[steps + 1]);
            let rho = p.hypot(q);
            let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (p / rho, q / rho) };
            hcol[steps] = rho;
            hcol[steps + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            let gk = g[steps];
            g[steps] = c * gk;
            g.push(-s * gk);
            hcols.push(hcol);
            steps += 1;
            total += 1;
            let est = g[steps].abs();
            log.residuals.push(est);
            log.elapsed.push(start.elapsed().as_secs_f64());
            log.iterations = total;
            check_divergence(total, est, beta0)?;
            let breakdown = hnext <= 1e-14 * beta0;
            if est <= target || breakdown {
                done = true;
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }
        // back substitution for the cycle's coefficients
        let mut y = vec![0.0; steps];
        for i in (0..steps).rev() {
            let mut s = g[i];
            for k in i + 1..steps {
                s -= hcols[k][i] * y[k];
            }
            y[i] = s / hcols[i][i];
        }
        let mut v = vec![0.0; n];
        for (k, yk) in y.iter().enumerate() {
            for (vi, bi) in v.iter_mut().zip(&basis[k]) {
                *vi += yk * bi;
            }
        }
        let dx = m.apply(&v)?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        r = residual(a, f, &x);
        let rn = norm2(&r);
        if let Some(last) = log.residuals.last_mut() {
            *last = rn;
        }
        if rn <= target {
            log.converged = true;
            break;
        }
        if done && steps < cycle {
            // estimate met but the true residual did not: restart
            log::debug!("GMRES estimate converged but true residual {rn:e} above target; restarting");
        }
    }
    Ok((x, log))
}

pub fn solve_with(
    a: &SparseOperator,
    f: &[f64],
    dd: &DomainDecomposition,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, IterationLog)> {
    match cfg.mode {
        Mode::Stationary => stationary_solve(a, f, dd, cfg.rel_tol, cfg.max_iter),
        Mode::Gmres => gmres_solve(a, f, dd, cfg.rel_tol, cfg.max_iter, cfg.gmres_restart),
    }
}

/// Direct solve of the global system (sparse LU plus refinement).
pub fn direct_solve(a: &SparseOperator, f: &[f64]) -> Result<Vec<f64>> {
    let lu = SparseLu::factor(a)?;
    Ok(lu.solve_refined(a, f, 1e-14, 3))
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CheckReport {
    pub residual: f64,
    pub relative_residual: f64,
    pub diff_direct: Option<f64>,
    pub relative_diff_direct: Option<f64>,
    pub error_exact_2: Option<f64>,
    pub error_exact_inf: Option<f64>,
}

pub fn reconstruct_and_check(
    u: &[f64],
    a: &SparseOperator,
    f: &[f64],
    direct: Option<&[f64]>,
    exact: Option<&[f64]>,
) -> CheckReport {
    let r = norm2(&residual(a, f, u));
    let fnorm = norm2(f);
    let diff = |w: &[f64]| u.iter().zip(w).map(|(p, q)| p - q).collect::<Vec<_>>();
    let dd = direct.map(|w| norm2(&diff(w)));
    CheckReport {
        residual: r,
        relative_residual: if fnorm > 0.0 { r / fnorm } else { r },
        diff_direct: dd,
        relative_diff_direct: dd.zip(direct).map(|(d, w)| d / norm2(w).max(f64::MIN_POSITIVE)),
        error_exact_2: exact.map(|w| norm2(&diff(w))),
        error_exact_inf: exact.map(|w| diff(w).iter().fold(0.0f64, |m, v| m.max(v.abs()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gmres_identity_one_iteration() {
        let a = SparseOperator::identity(6);
        let f = vec![1.0, 2.0, 0.0, -1.0, 3.0, 0.5];
        let (x, log) = gmres_solve(&a, &f, &Identity, 1e-10, 50, None).unwrap();
        assert_eq!(log.iterations, 1);
        assert!(log.converged);
        assert!(x.iter().zip(&f).all(|(p, q)| (p - q).abs() < 1e-15));
    }

    #[test]
    fn gmres_matches_direct_on_random_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + rng.random::<f64>()));
            for _ in 0..5 {
                t.push((i, rng.random_range(0..n), rng.random::<f64>() - 0.5));
            }
        }
        let a = SparseOperator::from_triplets(n, n, &t);
        let f: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let (x, log) = gmres_solve(&a, &f, &Identity, 1e-12, 200, None).unwrap();
        assert!(log.converged);
        let want = direct_solve(&a, &f).unwrap();
        for (p, q) in x.iter().zip(&want) {
            assert!((p - q).abs() < 1e-8);
        }
        // restarted variant reaches the same answer
        let (xr, lr) = gmres_solve(&a, &f, &Identity, 1e-12, 500, Some(7)).unwrap();
        assert!(lr.converged);
        for (p, q) in xr.iter().zip(&want) {
            assert!((p - q).abs() < 1e-8);
        }
    }

    #[test]
    fn stationary_with_exact_inverse_is_one_step() {
        struct Exact(SparseLu);
        impl Preconditioner for Exact {
            fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
                Ok(self.0.solve(r))
            }
        }
        let a = SparseOperator::from_triplets(3, 3, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0), (2, 0, 1.0), (2, 2, 4.0)]);
        let m = Exact(SparseLu::factor(&a).unwrap());
        let (_, log) = stationary_solve(&a, &[1.0, 2.0, 3.0], &m, 1e-6, 10).unwrap();
        assert_eq!((log.iterations, log.residuals.len()), (1, 2));
    }

    #[test]
    fn divergence_detected() {
        struct Amplify;
        impl Preconditioner for Amplify {
            fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
                Ok(r.iter().map(|v| -10.0 * v).collect())
            }
        }
        let a = SparseOperator::identity(2);
        let err = stationary_solve(&a, &[1.0, 1.0], &Amplify, 1e-6, 100).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = SparseOperator::identity(3);
        let (u, log) = stationary_solve(&a, &[0.0; 3], &Identity, 1e-6, 5).unwrap();
        assert!(log.converged && u == vec![0.0; 3]);
    }
}
