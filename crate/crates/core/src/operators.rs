//! Extension operator, ambient Laplacian and the stabilized surface
//! Helmholtz matrix
//!
//! ```text
//! A = (c + 2d/h²) I − (Δ^h + (2d/h²) I_pad) E
//! ```
//!
//! whose rows sum to `c` because `E` reproduces constants and `Δ^h`
//! annihilates them.

use rayon::prelude::*;

use crate::band::BandGrid;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::sparse::{CsrBuilder, SparseOperator};

/// Barycentric Lagrange weights on nodes `0..=p` evaluated at `t`.
pub fn interp_weights_1d(p: usize, t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0 && t <= p as f64) {
        return Err(Error::StencilPlacement { t, p });
    }
    let mut w = vec![0.0; p + 1];
    if t.fract() == 0.0 {
        w[t as usize] = 1.0;
        return Ok(w);
    }
    // w_j = 1 / prod_{k != j} (j - k)
    let mut total = 0.0;
    for (j, wj) in w.iter_mut().enumerate() {
        let mut b = 1.0;
        for k in 0..=p {
            if k != j {
                b *= j as f64 - k as f64;
            }
        }
        *wj = 1.0 / (b * (t - j as f64));
        total += *wj;
    }
    for wj in w.iter_mut() {
        *wj /= total;
    }
    Ok(w)
}

/// Tensor-product interpolation weights at `x` over active-node columns,
/// in stencil order.
pub fn interp_row(grid: &BandGrid, x: &Point) -> Result<Vec<(usize, f64)>> {
    let (base, off) = grid.stencil_base(x);
    let p = grid.p;
    let mut w1 = Vec::with_capacity(3);
    for a in 0..grid.d {
        w1.push(interp_weights_1d(p, off[a])?);
    }
    let q = p + 1;
    let nz = if grid.d == 3 { q } else { 1 };
    let mut row = Vec::with_capacity(q * q * nz);
    for i in 0..q {
        for j in 0..q {
            for k in 0..nz {
                let ix = [base[0] + i as i64, base[1] + j as i64, base[2] + k as i64];
                let col = grid
                    .index_of(&ix)
                    .filter(|&c| grid.is_active(c))
                    .ok_or_else(|| {
                        Error::Band(format!("interpolation stencil node {ix:?} is not active"))
                    })?;
                let mut w = w1[0][i] * w1[1][j];
                if grid.d == 3 {
                    w *= w1[2][k];
                }
                row.push((col, w));
            }
        }
    }
    Ok(row)
}

/// `E`: one row per band node (extended ordering), interpolating at its
/// closest point from active nodes.
pub fn build_extension(grid: &BandGrid) -> Result<SparseOperator> {
    let rows: Vec<Vec<(usize, f64)>> = grid
        .nodes()
        .par_iter()
        .map(|n| interp_row(grid, &n.cp.cp))
        .collect::<Result<_>>()?;
    let mut b = CsrBuilder::new(grid.n_active());
    for row in rows {
        b.push_row(row);
    }
    Ok(b.finish())
}

fn neighbor_columns(grid: &BandGrid, i: usize) -> Result<Vec<usize>> {
    let ix = grid.node(i).ix;
    grid.axis_neighbors(&ix)
        .map(|n| {
            grid.index_of(&n)
                .ok_or_else(|| Error::Band(format!("neighbour {n:?} of active node {ix:?} missing")))
        })
        .collect()
}

/// Second-order centred Laplacian: active rows over all band columns.
pub fn build_ambient_laplacian(grid: &BandGrid) -> Result<SparseOperator> {
    let h2 = grid.h * grid.h;
    let diag = -2.0 * grid.d as f64 / h2;
    let mut b = CsrBuilder::new(grid.n_total());
    for i in 0..grid.n_active() {
        let mut row: Vec<(usize, f64)> = neighbor_columns(grid, i)?
            .into_iter()
            .map(|c| (c, 1.0 / h2))
            .collect();
        row.push((i, diag));
        b.push_row(row);
    }
    Ok(b.finish())
}

/// `A = (c + 2d/h²) I − (Δ^h + (2d/h²) I_pad) E`.
pub fn assemble_helmholtz(
    grid: &BandGrid,
    extension: &SparseOperator,
    laplacian: &SparseOperator,
    c: f64,
) -> Result<SparseOperator> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("Helmholtz shift c must be positive, got {c}")));
    }
    let na = grid.n_active();
    if extension.nrows() != grid.n_total() || extension.ncols() != na || laplacian.nrows() != na {
        return Err(Error::Band("operator shapes inconsistent with the band".into()));
    }
    let shift = 2.0 * grid.d as f64 / (grid.h * grid.h);
    let pad = SparseOperator::from_triplets(na, grid.n_total(), &(0..na).map(|i| (i, i, shift)).collect::<Vec<_>>());
    let stabilized = laplacian.add(1.0, &pad, 1.0).matmul(extension);
    Ok(SparseOperator::identity(na).add(c + shift, &stabilized, -1.0))
}

/// The global discretization of `(c − Δ_S) u = f` on a band.
#[derive(Clone, Debug)]
pub struct Operators {
    pub c: f64,
    pub extension: SparseOperator,
    pub laplacian: SparseOperator,
    pub helmholtz: SparseOperator,
}

impl Operators {
    pub fn build(grid: &BandGrid, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("Helmholtz shift c must be positive, got {c}")));
        }
        let extension = build_extension(grid)?;
        let laplacian = build_ambient_laplacian(grid)?;
        let helmholtz = assemble_helmholtz(grid, &extension, &laplacian, c)?;
        Ok(Operators {
            c,
            extension,
            laplacian,
            helmholtz,
        })
    }
}
