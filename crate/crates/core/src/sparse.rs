//! Compressed sparse row matrices.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// A general sparse matrix in CSR form. Column indices within a row are
/// strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Build from triplets; duplicates are summed, explicit zeros kept.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of range");
            rows[r].push((c, v));
        }
        let mut b = CsrBuilder::new(ncols);
        for row in rows {
            b.push_row(row);
        }
        b.finish()
    }

    pub fn identity(n: usize) -> Self {
        SparseOperator {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn row_iter(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (c, v) = self.row(i);
        c.iter().copied().zip(v.iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map_or(0.0, |k| v[k])
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `y = A x`, accumulated per row in column order.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            *yi = s;
        }
    }

    pub fn spmv(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y);
        y
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &SparseOperator) -> SparseOperator {
        assert_eq!(self.ncols, other.nrows, "shape mismatch in sparse product");
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut cols = Vec::new();
        let mut b = CsrBuilder::new(other.ncols);
        for i in 0..self.nrows {
            cols.clear();
            for (k, a) in self.row_iter(i) {
                for (j, v) in other.row_iter(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        cols.push(j);
                    }
                    acc[j] += a * v;
                }
            }
            cols.sort_unstable();
            b.push_sorted_row(cols.iter().map(|&j| (j, acc[j])));
        }
        b.finish()
    }

    /// `alpha · self + beta · other`.
    pub fn add(&self, alpha: f64, other: &SparseOperator, beta: f64) -> SparseOperator {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut b = CsrBuilder::new(self.ncols);
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            let mut row = Vec::with_capacity(ca.len() + cb.len());
            while p < ca.len() || q < cb.len() {
                if q == cb.len() || (p < ca.len() && ca[p] < cb[q]) {
                    row.push((ca[p], alpha * va[p]));
                    p += 1;
                } else if p == ca.len() || cb[q] < ca[p] {
                    row.push((cb[q], beta * vb[q]));
                    q += 1;
                } else {
                    row.push((ca[p], alpha * va[p] + beta * vb[q]));
                    p += 1;
                    q += 1;
                }
            }
            b.push_sorted_row(row);
        }
        b.finish()
    }

    pub fn transpose(&self) -> SparseOperator {
        let mut count = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            count[c + 1] += 1;
        }
        for j in 0..self.ncols {
            count[j + 1] += count[j];
        }
        let indptr = count.clone();
        let mut next = count;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for (j, v) in self.row_iter(i) {
                let k = next[j];
                indices[k] = i;
                values[k] = v;
                next[j] += 1;
            }
        }
        SparseOperator {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            values,
        }
    }

    /// Submatrix `self[rows, cols]`, where `col_map[c]` is the new
    /// column of global column `c` (or `None` to drop it).
    pub fn select(&self, rows: &[usize], col_map: &[Option<usize>], ncols: usize) -> SparseOperator {
        let mut b = CsrBuilder::new(ncols);
        for &i in rows {
            let mut row: Vec<(usize, f64)> = self
                .row_iter(i)
                .filter_map(|(c, v)| col_map[c].map(|nc| (nc, v)))
                .collect();
            row.sort_unstable_by_key(|e| e.0);
            b.push_sorted_row(row);
        }
        b.finish()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row_iter(i) {
                row[j] = v;
            }
        }
        out
    }

    /// MatrixMarket coordinate (general, real) export.
    pub fn write_matrix_market(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "%%MatrixMarket matrix coordinate real general").map_err(io)?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz()).map_err(io)?;
        for i in 0..self.nrows {
            for (j, v) in self.row_iter(i) {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, v).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    pub fn read_matrix_market(path: &Path) -> Result<SparseOperator> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let err = |line: usize, message: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.starts_with('%') && !l.trim().is_empty());
        let (ln, header) = lines.next().ok_or_else(|| err(1, "missing size line"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(ln + 1, "bad size line")))
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(err(ln + 1, "size line needs three integers"));
        }
        let mut trip = Vec::with_capacity(dims[2]);
        for (ln, l) in lines {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 3 {
                return Err(err(ln + 1, "entry needs row, column, value"));
            }
            let r: usize = t[0].parse().map_err(|_| err(ln + 1, "bad row"))?;
            let c: usize = t[1].parse().map_err(|_| err(ln + 1, "bad column"))?;
            let v: f64 = t[2].parse().map_err(|_| err(ln + 1, "bad value"))?;
            if r == 0 || c == 0 || r > dims[0] || c > dims[1] {
                return Err(err(ln + 1, "index out of range"));
            }
            trip.push((r - 1, c - 1, v));
        }
        Ok(SparseOperator::from_triplets(dims[0], dims[1], &trip))
    }
}

/// Row-by-row CSR construction.
pub struct CsrBuilder {
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrBuilder {
    pub fn new(ncols: usize) -> Self {
        CsrBuilder {
            ncols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Append a row given in any order; duplicate columns are summed.
    pub fn push_row(&mut self, mut entries: Vec<(usize, f64)>) {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        self.push_sorted_row(merged);
    }

    /// Append a row whose columns are strictly increasing.
    pub fn push_sorted_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>) {
        for (c, v) in entries {
            debug_assert!(c < self.ncols);
            debug_assert!(self.indices.len() == *self.indptr.last().unwrap() || *self.indices.last().unwrap() < c);
            self.indices.push(c);
            self.values.push(v);
        }
        self.indptr.push(self.indices.len());
    }

    pub fn finish(self) -> SparseOperator {
        SparseOperator {
            nrows: self.indptr.len() - 1,
            ncols: self.ncols,
            indptr: self.indptr,
            indices: self.indices,
            values: self.values,
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
