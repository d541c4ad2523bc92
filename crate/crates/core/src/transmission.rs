//! Transmission rows and local operators.
//!
//! Local unknowns are ordered `[Σ_j ; active Σ_j^BC]`.
//!
//! Dirichlet: rows on Σ_j are the global stabilized Helmholtz rows (ghosts
//! eliminated through their extension rows) and each BC row is `u_i = 0`,
//! which is algebraic RAS.
//!
//! Robin: every local row is `(c + 2d/h²) u_i − h⁻² Σ_k (T u)_k` over the
//! axis neighbours of `x_i`, with the extension `T` equal to the global one
//! on Σ_j ∪ Σ_j^G and to `u(CP_{S_j}(x_k)) / (1 + α_k d_k·q̂_k)` on Σ_j^BC.
//! Ghost-type BC nodes enter only through `T`. Rows not adjacent to Σ_j^BC
//! coincide with the global ones and are copied from it.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::band::BandGrid;
use crate::error::{Error, Result};
use crate::lu::SparseLu;
use crate::operators::interp_row;
use crate::sparse::{norm2, CsrBuilder, SparseOperator};
use crate::subdomain::{BoundaryNode, Subdomain};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransmissionKind {
    Dirichlet,
    Robin,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransmissionSpec {
    pub kind: TransmissionKind,
    pub alpha: f64,
    /// Weight near cross points.
    pub alpha_cross: f64,
}

impl TransmissionSpec {
    pub fn dirichlet() -> Self {
        TransmissionSpec {
            kind: TransmissionKind::Dirichlet,
            alpha: f64::INFINITY,
            alpha_cross: f64::INFINITY,
        }
    }

    pub fn robin(alpha: f64, alpha_cross: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("Robin weight must be positive, got {alpha}")));
        }
        if !(alpha_cross >= alpha && alpha_cross.is_finite()) {
            return Err(Error::Config(format!(
                "cross-point weight {alpha_cross} must be at least alpha = {alpha}"
            )));
        }
        Ok(TransmissionSpec {
            kind: TransmissionKind::Robin,
            alpha,
            alpha_cross,
        })
    }

    pub fn is_robin(&self) -> bool {
        self.kind == TransmissionKind::Robin
    }

    pub fn weight(&self, b: &BoundaryNode) -> f64 {
        if b.cross_flagged {
            self.alpha_cross
        } else {
            self.alpha
        }
    }
}

/// Robin scale factor `1 / (1 + α d·q̂)`.
pub fn robin_scale(alpha: f64, offset_dot_conormal: f64) -> Result<f64> {
    let denom = 1.0 + alpha * offset_dot_conormal;
    if !(denom > 0.0) {
        return Err(Error::Transmission(format!(
            "Robin denominator 1 + α d·q̂ = {denom} is not positive"
        )));
    }
    Ok(1.0 / denom)
}

/// Global-to-local column map of a subdomain (ghost-type nodes have none).
pub fn local_columns(grid: &BandGrid, sub: &Subdomain) -> Vec<Option<usize>> {
    let mut map = vec![None; grid.n_total()];
    for (l, &i) in sub.overlap.iter().enumerate() {
        map[i] = Some(l);
    }
    let off = sub.overlap.len();
    for (l, b) in sub.bc.iter().filter(|b| !b.is_ghost_type).enumerate() {
        map[b.node] = Some(off + l);
    }
    map
}

fn to_local(sub: &Subdomain, col_map: &[Option<usize>], row: Vec<(usize, f64)>, node: usize) -> Result<Vec<(usize, f64)>> {
    row.into_iter()
        .map(|(c, w)| {
            col_map[c].map(|lc| (lc, w)).ok_or_else(|| {
                Error::Transmission(format!(
                    "subdomain {}: transmission row of node {node} reaches node {c} outside the local problem",
                    sub.id
                ))
            })
        })
        .collect()
}

/// Stabilized rows `(c + 2d/h²) e_i − h⁻² Σ_k T_k` with the Robin-modified
/// extension `T`, built lazily per BC node.
struct RobinRows<'a> {
    grid: &'a BandGrid,
    sub: &'a Subdomain,
    spec: &'a TransmissionSpec,
    col_map: &'a [Option<usize>],
    diag: f64,
    bc_slot: HashMap<usize, usize>,
    t_rows: Vec<Option<Vec<(usize, f64)>>>,
}

impl<'a> RobinRows<'a> {
    fn new(grid: &'a BandGrid, sub: &'a Subdomain, spec: &'a TransmissionSpec, col_map: &'a [Option<usize>], c: f64) -> Self {
        let bc_slot = sub.bc.iter().enumerate().map(|(s, b)| (b.node, s)).collect();
        RobinRows {
            grid,
            sub,
            spec,
            col_map,
            diag: c + 2.0 * grid.d as f64 / (grid.h * grid.h),
            bc_slot,
            t_rows: vec![None; sub.bc.len()],
        }
    }

    fn neighbors(&self, i: usize) -> Result<Vec<usize>> {
        self.grid
            .axis_neighbors(&self.grid.node(i).ix)
            .map(|ix| {
                self.grid.index_of(&ix).ok_or_else(|| {
                    Error::Transmission(format!("subdomain {}: neighbour {ix:?} of node {i} missing", self.sub.id))
                })
            })
            .collect()
    }

    fn touches_boundary(&self, i: usize) -> Result<bool> {
        Ok(self.neighbors(i)?.iter().any(|k| self.bc_slot.contains_key(k)))
    }

    fn extension(&mut self, k: usize) -> Result<Vec<(usize, f64)>> {
        let Some(&s) = self.bc_slot.get(&k) else {
            return to_local(self.sub, self.col_map, interp_row(self.grid, &self.grid.node(k).cp.cp)?, k);
        };
        if self.t_rows[s].is_none() {
            let b = &self.sub.bc[s];
            let scale = robin_scale(self.spec.weight(b), b.offset.dot(&b.conormal))?;
            let w = interp_row(self.grid, &b.cp_local)?.into_iter().map(|(c, w)| (c, scale * w)).collect();
            self.t_rows[s] = Some(to_local(self.sub, self.col_map, w, k)?);
        }
        Ok(self.t_rows[s].clone().unwrap())
    }

    fn row(&mut self, i: usize) -> Result<Vec<(usize, f64)>> {
        let h2 = self.grid.h * self.grid.h;
        let mut row = vec![(self.col_map[i].unwrap(), self.diag)];
        for k in self.neighbors(i)? {
            row.extend(self.extension(k)?.into_iter().map(|(lc, w)| (lc, -w / h2)));
        }
        Ok(row)
    }
}

/// Transmission rows over the active nodes of Σ_j^BC, in terms of local
/// columns.
pub fn build_transmission_rows(
    sub: &Subdomain,
    spec: &TransmissionSpec,
    grid: &BandGrid,
    col_map: &[Option<usize>],
    c: f64,
) -> Result<Vec<Vec<(usize, f64)>>> {
    let active = sub.bc.iter().filter(|b| !b.is_ghost_type);
    if !spec.is_robin() {
        return Ok(active.map(|b| vec![(col_map[b.node].unwrap(), 1.0)]).collect());
    }
    let mut robin = RobinRows::new(grid, sub, spec, col_map, c);
    active.map(|b| robin.row(b.node)).collect()
}

/// A subdomain's square operator and, once factored, its LU.
pub struct LocalOperator {
    pub matrix: SparseOperator,
    pub n_interior: usize,
    lu: Option<SparseLu>,
}

pub fn assemble_local(
    grid: &BandGrid,
    helmholtz: &SparseOperator,
    c: f64,
    sub: &Subdomain,
    spec: &TransmissionSpec,
) -> Result<LocalOperator> {
    let col_map = local_columns(grid, sub);
    let mut b = CsrBuilder::new(sub.n_local());
    let mut robin = spec.is_robin().then(|| RobinRows::new(grid, sub, spec, &col_map, c));
    for &i in &sub.overlap {
        // with Robin transmission, rows next to Σ_j^BC see the modified extension
        if let Some(r) = robin.as_mut() {
            if r.touches_boundary(i)? {
                b.push_row(r.row(i)?);
                continue;
            }
        }
        let mut row = Vec::with_capacity(helmholtz.row(i).0.len());
        for (c, v) in helmholtz.row_iter(i) {
            let lc = col_map[c].ok_or_else(|| Error::Subdomain {
                subdomain: sub.id,
                message: format!("PDE row of node {i} references node {c} outside the local problem"),
            })?;
            row.push((lc, v));
        }
        b.push_row(row);
    }
    for row in build_transmission_rows(sub, spec, grid, &col_map, c)? {
        b.push_row(row);
    }
    Ok(LocalOperator {
        matrix: b.finish(),
        n_interior: sub.overlap.len(),
        lu: None,
    })
}

impl LocalOperator {
    pub fn factor(&mut self, subdomain: usize) -> Result<()> {
        let lu = SparseLu::factor(&self.matrix).map_err(|e| match e {
            Error::SingularPivot { step, .. } => Error::SingularPivot { subdomain, step },
            other => other,
        })?;
        self.lu = Some(lu);
        Ok(())
    }

    pub fn is_factored(&self) -> bool {
        self.lu.is_some()
    }

    /// Solve `A_j z = b` to a relative residual of 1e-12, refining once
    /// when the plain solve misses it.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let lu = self.lu.as_ref().ok_or_else(|| {
            Error::Transmission("local operator used before factorization".into())
        })?;
        Ok(lu.solve_refined(&self.matrix, b, 1e-12, 1))
    }

    /// Solve with right-hand side `[r_Σj ; 0]`.
    pub fn solve_interior(&self, r: &[f64]) -> Result<Vec<f64>> {
        let mut b = vec![0.0; self.matrix.nrows()];
        b[..r.len()].copy_from_slice(r);
        self.solve(&b)
    }

    pub fn residual_norm(&self, z: &[f64], b: &[f64]) -> f64 {
        let az = self.matrix.spmv(z);
        norm2(&az.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>())
    }
}
