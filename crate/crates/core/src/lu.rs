//! Multifrontal sparse LU.
//!
//! Fill-reducing order by nested dissection on the pattern of `A + Aᵀ`
//! (separators are BFS level sets). Each separator, and each small leaf, is
//! one supernode whose dense front is factored with partial pivoting
//! restricted to its fully-summed rows. Dense kernels come from faer.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::factor::{lu_in_place, lu_in_place_scratch};
use faer::linalg::matmul::matmul;
use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_unit_lower_triangular_in_place,
    solve_upper_triangular_in_place,
};
use faer::{Accum, Mat, Par};

use crate::error::{Error, Result};
use crate::sparse::{norm2, SparseOperator};

/// Components at most this large are not dissected further.
const LEAF_SIZE: usize = 96;

struct Front {
    vars: Vec<usize>,
    update: Vec<usize>,
    /// Packed `L11 \ U11` with unit lower diagonal implied.
    lu11: Mat<f64>,
    /// Row `i` of the pivoted block is original own row `perm[i]`.
    perm: Vec<usize>,
    u12: Mat<f64>,
    l21: Mat<f64>,
}

pub struct SparseLu {
    n: usize,
    fronts: Vec<Front>,
}

/// Symmetrized adjacency (CSR, no diagonal).
fn symmetric_pattern(a: &SparseOperator) -> (Vec<usize>, Vec<usize>) {
    let n = a.nrows();
    let at = a.transpose();
    let mut ptr = vec![0usize; n + 1];
    let mut adj = Vec::with_capacity(2 * a.nnz());
    let mut mark = vec![usize::MAX; n];
    for i in 0..n {
        mark[i] = i;
        for m in [a, &at] {
            for &j in m.row(i).0 {
                if mark[j] != i {
                    mark[j] = i;
                    adj.push(j);
                }
            }
        }
        ptr[i + 1] = adj.len();
    }
    (ptr, adj)
}

struct Dissector<'a> {
    ptr: &'a [usize],
    adj: &'a [usize],
    tag: Vec<u32>,
    stamp: u32,
    level: Vec<u32>,
    supernodes: Vec<Vec<usize>>,
    parent: Vec<usize>,
}

impl Dissector<'_> {
    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }

    fn next_stamp(&mut self) -> u32 {
        self.stamp += 1;
        self.stamp
    }

    /// BFS restricted to nodes tagged `member`; returns the visit order and
    /// fills `self.level`.
    fn bfs(&mut self, start: usize, member: u32, visit: u32) -> Vec<usize> {
        let mut order = vec![start];
        self.tag[start] = visit;
        self.level[start] = 0;
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            let lv = self.level[v];
            for k in self.ptr[v]..self.ptr[v + 1] {
                let w = self.adj[k];
                if self.tag[w] == member {
                    self.tag[w] = visit;
                    self.level[w] = lv + 1;
                    order.push(w);
                }
            }
        }
        order
    }

    fn new_supernode(&mut self, vars: Vec<usize>, children: &[usize]) -> usize {
        let id = self.supernodes.len();
        self.supernodes.push(vars);
        self.parent.push(usize::MAX);
        for &c in children {
            self.parent[c] = id;
        }
        id
    }

    /// Order `set`; returns the root supernodes created for it.
    fn dissect(&mut self, mut set: Vec<usize>) -> Vec<usize> {
        set.sort_unstable();
        let member = self.next_stamp();
        for &v in &set {
            self.tag[v] = member;
        }
        let mut components = Vec::new();
        for &v in &set {
            if self.tag[v] == member {
                let visit = self.next_stamp();
                components.push(self.bfs(v, member, visit));
            }
        }
        let mut roots = Vec::new();
        for comp in components {
            roots.push(self.dissect_component(comp));
        }
        roots
    }

    fn dissect_component(&mut self, comp: Vec<usize>) -> usize {
        if comp.len() <= LEAF_SIZE {
            let mut vars = comp;
            vars.sort_unstable();
            return self.new_supernode(vars, &[]);
        }
        // pseudo-peripheral start node
        let mut start = *comp.iter().min().unwrap();
        let mut order;
        let mut ecc = 0;
        loop {
            let member = self.next_stamp();
            for &v in &comp {
                self.tag[v] = member;
            }
            let visit = self.next_stamp();
            order = self.bfs(start, member, visit);
            let depth = self.level[*order.last().unwrap()];
            if depth <= ecc {
                break;
            }
            ecc = depth;
            let far = order
                .iter()
                .copied()
                .filter(|&v| self.level[v] == depth)
                .min_by_key(|&v| (self.neighbors(v).len(), v))
                .unwrap();
            if far == start {
                break;
            }
            start = far;
        }
        let member = self.next_stamp();
        for &v in &comp {
            self.tag[v] = member;
        }
        let visit = self.next_stamp();
        order = self.bfs(start, member, visit);
        let depth = self.level[*order.last().unwrap()] as usize;
        if depth < 2 {
            let mut vars = comp;
            vars.sort_unstable();
            return self.new_supernode(vars, &[]);
        }
        let mut counts = vec![0usize; depth + 1];
        for &v in &order {
            counts[self.level[v] as usize] += 1;
        }
        // smallest level whose removal leaves both sides within [1/3, 2/3]
        // of the component; fall back to the median level
        let n = comp.len();
        let mut below = 0;
        let mut best: Option<(usize, usize)> = None;
        let mut median = 1;
        for l in 0..=depth {
            let above = n - below - counts[l];
            if l > 0 && l < depth {
                if below * 2 <= n {
                    median = l;
                }
                if 3 * below >= n && 3 * above >= n && best.is_none_or(|(_, c)| counts[l] < c) {
                    best = Some((l, counts[l]));
                }
            }
            below += counts[l];
        }
        let sep_level = best.map_or(median, |(l, _)| l) as u32;
        let mut sep = Vec::new();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for &v in &order {
            match self.level[v].cmp(&sep_level) {
                std::cmp::Ordering::Less => lo.push(v),
                std::cmp::Ordering::Equal => sep.push(v),
                std::cmp::Ordering::Greater => hi.push(v),
            }
        }
        let mut children = self.dissect(lo);
        children.extend(self.dissect(hi));
        sep.sort_unstable();
        self.new_supernode(sep, &children)
    }
}

fn dense_stack(k: usize) -> MemBuffer {
    MemBuffer::new(lu_in_place_scratch::<usize, f64>(k, k, Par::Seq, Default::default()))
}

impl SparseLu {
    pub fn factor(a: &SparseOperator) -> Result<Self> {
        assert_eq!(a.nrows(), a.ncols(), "LU needs a square matrix");
        let n = a.nrows();
        let (ptr, adj) = symmetric_pattern(a);
        let mut dis = Dissector {
            ptr: &ptr,
            adj: &adj,
            tag: vec![0; n],
            stamp: 0,
            level: vec![0; n],
            supernodes: Vec::new(),
            parent: Vec::new(),
        };
        dis.dissect((0..n).collect());
        let supernodes = std::mem::take(&mut dis.supernodes);
        let parent = std::mem::take(&mut dis.parent);
        drop(dis);

        // supernodes are already in postorder (children created first)
        let ns = supernodes.len();
        let mut owner = vec![0usize; n];
        for (s, vars) in supernodes.iter().enumerate() {
            for &v in vars {
                owner[v] = s;
            }
        }
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); ns];
        for s in 0..ns {
            if parent[s] != usize::MAX {
                children[parent[s]].push(s);
            }
        }

        let at = a.transpose();
        let amax = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let pivot_tol = 1e-14 * amax.max(f64::MIN_POSITIVE);
        let mut updates: Vec<Vec<usize>> = vec![Vec::new(); ns];
        let mut contributions: Vec<Option<Mat<f64>>> = (0..ns).map(|_| None).collect();
        let mut loc = vec![usize::MAX; n];
        let mut fronts = Vec::with_capacity(ns);
        let mut step = 0usize;

        for s in 0..ns {
            let vars = &supernodes[s];
            // update set: ancestors adjacent to this supernode or to the
            // update sets of its children
            let mut upd: Vec<usize> = Vec::new();
            for &v in vars {
                loc[v] = 0;
            }
            let push = |w: usize, loc: &mut Vec<usize>, upd: &mut Vec<usize>| {
                if owner[w] > s && loc[w] == usize::MAX {
                    loc[w] = 0;
                    upd.push(w);
                }
            };
            for &v in vars {
                for &w in &adj[ptr[v]..ptr[v + 1]] {
                    push(w, &mut loc, &mut upd);
                }
            }
            for &c in &children[s] {
                for &w in &updates[c] {
                    push(w, &mut loc, &mut upd);
                }
            }
            upd.sort_unstable_by_key(|&w| (owner[w], w));
            let k = vars.len();
            let m = k + upd.len();
            for (i, &v) in vars.iter().chain(upd.iter()).enumerate() {
                loc[v] = i;
            }

            let mut f = Mat::<f64>::zeros(m, m);
            for (li, &v) in vars.iter().enumerate() {
                for (w, val) in a.row_iter(v) {
                    if owner[w] >= s {
                        f[(li, loc[w])] += val;
                    }
                }
                for (w, val) in at.row_iter(v) {
                    // entry (w, v) with w an update row
                    if owner[w] > s {
                        f[(loc[w], li)] += val;
                    }
                }
            }
            for &c in &children[s] {
                let cb = contributions[c].take().unwrap();
                let idx: Vec<usize> = updates[c].iter().map(|&w| loc[w]).collect();
                for (cj, &fj) in idx.iter().enumerate() {
                    for (ci, &fi) in idx.iter().enumerate() {
                        f[(fi, fj)] += cb[(ci, cj)];
                    }
                }
                updates[c] = Vec::new();
            }

            let u = m - k;
            let mut perm = vec![0usize; k];
            let mut perm_inv = vec![0usize; k];
            {
                let mut buf = dense_stack(k);
                let stack = MemStack::new(&mut buf);
                lu_in_place(
                    f.as_mut().submatrix_mut(0, 0, k, k),
                    &mut perm,
                    &mut perm_inv,
                    Par::Seq,
                    stack,
                    Default::default(),
                );
            }
            for i in 0..k {
                let piv = f[(i, i)];
                if !(piv.abs() > pivot_tol) {
                    return Err(Error::SingularPivot {
                        subdomain: 0,
                        step: step + i,
                    });
                }
            }
            step += k;
            let (top, bottom) = f.as_mut().split_at_row_mut(k);
            let (f11, mut f12) = top.split_at_col_mut(k);
            let (mut f21, mut f22) = bottom.split_at_col_mut(k);
            if u > 0 {
                // P F12
                let orig = f12.to_owned();
                for i in 0..k {
                    for j in 0..u {
                        f12[(i, j)] = orig[(perm[i], j)];
                    }
                }
                solve_unit_lower_triangular_in_place(f11.as_ref(), f12.as_mut(), Par::Seq);
                solve_lower_triangular_in_place(f11.as_ref().transpose(), f21.as_mut().transpose_mut(), Par::Seq);
                matmul(f22.as_mut(), Accum::Add, f21.as_ref(), f12.as_ref(), -1.0, Par::Seq);
            }
            let front = Front {
                vars: vars.clone(),
                update: upd.clone(),
                lu11: f11.to_owned(),
                perm,
                u12: f12.to_owned(),
                l21: f21.to_owned(),
            };
            if u > 0 {
                contributions[s] = Some(f22.to_owned());
            }
            for &v in front.vars.iter().chain(front.update.iter()) {
                loc[v] = usize::MAX;
            }
            updates[s] = upd;
            fronts.push(front);
        }
        Ok(SparseLu { n, fronts })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entries stored in the factors.
    pub fn factor_nnz(&self) -> usize {
        self.fronts
            .iter()
            .map(|f| f.vars.len() * (f.vars.len() + 2 * f.update.len()))
            .sum()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut w = b.to_vec();
        let mut tmp = Mat::<f64>::zeros(0, 1);
        let mut upd = Mat::<f64>::zeros(0, 1);
        for f in &self.fronts {
            let k = f.vars.len();
            tmp.resize_with(k, 1, |_, _| 0.0);
            for i in 0..k {
                tmp[(i, 0)] = w[f.vars[f.perm[i]]];
            }
            solve_unit_lower_triangular_in_place(f.lu11.as_ref(), tmp.as_mut(), Par::Seq);
            for i in 0..k {
                w[f.vars[i]] = tmp[(i, 0)];
            }
            if !f.update.is_empty() {
                let m = f.update.len();
                upd.resize_with(m, 1, |_, _| 0.0);
                matmul(upd.as_mut(), Accum::Replace, f.l21.as_ref(), tmp.as_ref(), 1.0, Par::Seq);
                for (r, &v) in f.update.iter().enumerate() {
                    w[v] -= upd[(r, 0)];
                }
            }
        }
        // backward sweep; w now holds intermediate values on own slots
        let mut x = vec![0.0; self.n];
        for f in self.fronts.iter().rev() {
            let k = f.vars.len();
            tmp.resize_with(k, 1, |_, _| 0.0);
            for i in 0..k {
                tmp[(i, 0)] = w[f.vars[i]];
            }
            if !f.update.is_empty() {
                upd.resize_with(f.update.len(), 1, |_, _| 0.0);
                for (j, &v) in f.update.iter().enumerate() {
                    upd[(j, 0)] = x[v];
                }
                matmul(tmp.as_mut(), Accum::Add, f.u12.as_ref(), upd.as_ref(), -1.0, Par::Seq);
            }
            solve_upper_triangular_in_place(f.lu11.as_ref(), tmp.as_mut(), Par::Seq);
            for i in 0..k {
                x[f.vars[i]] = tmp[(i, 0)];
            }
        }
        x
    }

    /// Solve followed by iterative refinement against `a` until the
    /// residual drops below `tol·‖b‖₂` (at most `max_steps` corrections).
    pub fn solve_refined(&self, a: &SparseOperator, b: &[f64], tol: f64, max_steps: usize) -> Vec<f64> {
        let mut x = self.solve(b);
        let bn = norm2(b);
        for _ in 0..max_steps {
            let ax = a.spmv(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            if norm2(&r) <= tol * bn {
                break;
            }
            let dx = self.solve(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        x
    }
}
