//! The computational band: active nodes (interpolation stencils) and ghost
//! nodes (completion of the finite-difference stencils) on a uniform lattice.
//!
//! Nodes are stored in the *extended ordering*: active nodes `0..n_active`
//! followed by ghosts, each group sorted lexicographically by lattice index.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CpResult, Point, Surface};

pub type LatticeIndex = [i64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandMode {
    Tube,
    Algorithmic,
}

impl std::str::FromStr for BandMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tube" => Ok(BandMode::Tube),
            "algorithmic" => Ok(BandMode::Algorithmic),
            _ => Err(Error::Config(format!("unknown band mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub ix: LatticeIndex,
    pub x: Point,
    pub cp: CpResult,
}

/// Dense lattice-index lookup over a box; `u32::MAX` marks "not in band".
#[derive(Clone, Debug)]
struct LatticeBox {
    lo: LatticeIndex,
    shape: [usize; 3],
    slots: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl LatticeBox {
    fn new(lo: LatticeIndex, hi: LatticeIndex) -> Self {
        let shape = [0, 1, 2].map(|a| (hi[a] - lo[a] + 1).max(1) as usize);
        LatticeBox {
            lo,
            shape,
            slots: vec![NONE; shape[0] * shape[1] * shape[2]],
        }
    }

    fn offset(&self, ix: &LatticeIndex) -> Option<usize> {
        let mut off = 0;
        for a in 0..3 {
            let r = ix[a] - self.lo[a];
            if r < 0 || r as usize >= self.shape[a] {
                return None;
            }
            off = off * self.shape[a] + r as usize;
        }
        Some(off)
    }

    fn get(&self, ix: &LatticeIndex) -> Option<u32> {
        self.offset(ix).map(|o| self.slots[o]).filter(|&v| v != NONE)
    }

    fn set(&mut self, ix: &LatticeIndex, v: u32) -> Result<()> {
        let o = self
            .offset(ix)
            .ok_or_else(|| Error::Band(format!("lattice node {ix:?} outside the band box")))?;
        self.slots[o] = v;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BandGrid {
    pub h: f64,
    pub d: usize,
    pub p: usize,
    pub origin: Point,
    pub mode: BandMode,
    /// Radius of the active tube (tube construction) or of the largest
    /// active-node distance (algorithmic).
    pub lambda: f64,
    nodes: Vec<Node>,
    n_active: usize,
    lookup: LatticeBox,
    pub warnings: Vec<String>,
}

/// Lower corner (per axis) of the interpolation stencil for lattice
/// coordinate `t`, plus the offset of `t` from it in units of `h`.
///
/// Odd `p`: the query lies in the central cell. Even `p`: the stencil is
/// centred on the nearest node. Ties resolve to the lower cell/node.
pub fn stencil_base_1d(t: f64, p: usize) -> (i64, f64) {
    let base = if p % 2 == 1 {
        t.ceil() as i64 - 1 - (p as i64 - 1) / 2
    } else {
        (t - 0.5).ceil() as i64 - p as i64 / 2
    };
    (base, t - base as f64)
}

impl BandGrid {
    pub fn build(surface: &Surface, h: f64, p: usize, mode: BandMode) -> Result<Self> {
        match mode {
            BandMode::Tube => build_band_tube(surface, h, p),
            BandMode::Algorithmic => build_band_algorithmic(surface, h, p),
        }
    }

    pub fn n_active(&self) -> usize {
        self.n_active
    }

    pub fn n_ghost(&self) -> usize {
        self.nodes.len() - self.n_active
    }

    pub fn n_total(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn active(&self) -> &[Node] {
        &self.nodes[..self.n_active]
    }

    pub fn ghosts(&self) -> &[Node] {
        &self.nodes[self.n_active..]
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn is_active(&self, i: usize) -> bool {
        i < self.n_active
    }

    /// Extended-ordering index of a lattice node, if it is in the band.
    pub fn index_of(&self, ix: &LatticeIndex) -> Option<usize> {
        self.lookup.get(ix).map(|v| v as usize)
    }

    pub fn position(&self, ix: &LatticeIndex) -> Point {
        lattice_position(self.origin, self.h, ix)
    }

    /// Lattice coordinates of `x` (real-valued).
    pub fn lattice_coords(&self, x: &Point) -> [f64; 3] {
        [0, 1, 2].map(|a| (x.0[a] - self.origin.0[a]) / self.h)
    }

    /// The `2d` axis neighbours of a lattice index.
    pub fn axis_neighbors(&self, ix: &LatticeIndex) -> impl Iterator<Item = LatticeIndex> + '_ {
        let ix = *ix;
        (0..self.d).flat_map(move |a| {
            [-1i64, 1].into_iter().map(move |s| {
                let mut n = ix;
                n[a] += s;
                n
            })
        })
    }

    /// Lower corner of the interpolation stencil for a point, with the
    /// per-axis offsets.
    pub fn stencil_base(&self, x: &Point) -> (LatticeIndex, [f64; 3]) {
        stencil_base(self.origin, self.h, self.d, self.p, x)
    }

    /// Lattice indices of the `(p+1)^d` interpolation stencil of `x`.
    pub fn stencil(&self, x: &Point) -> Vec<LatticeIndex> {
        stencil_nodes(self.origin, self.h, self.d, self.p, x)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point([f64::INFINITY; 3]);
        let mut hi = Point([f64::NEG_INFINITY; 3]);
        for n in &self.nodes {
            for a in 0..3 {
                lo.0[a] = lo.0[a].min(n.x.0[a]);
                hi.0[a] = hi.0[a].max(n.x.0[a]);
            }
        }
        (lo, hi)
    }

    fn assemble(
        surface: &Surface,
        h: f64,
        p: usize,
        mode: BandMode,
        lambda: f64,
        mut active: Vec<LatticeIndex>,
        mut ghost: Vec<LatticeIndex>,
        lookup_lo: LatticeIndex,
        lookup_hi: LatticeIndex,
        warnings: Vec<String>,
    ) -> Result<Self> {
        active.sort_unstable();
        ghost.sort_unstable();
        let origin = Point::ZERO;
        let mut lookup = LatticeBox::new(lookup_lo, lookup_hi);
        let mut nodes = Vec::with_capacity(active.len() + ghost.len());
        for ix in active.iter().chain(ghost.iter()) {
            lookup.set(ix, nodes.len() as u32)?;
            let x = lattice_position(origin, h, ix);
            nodes.push(Node {
                ix: *ix,
                x,
                cp: surface.closest_point(&x),
            });
        }
        Ok(BandGrid {
            h,
            d: surface.dim(),
            p,
            origin,
            mode,
            lambda,
            nodes,
            n_active: active.len(),
            lookup,
            warnings,
        })
    }
}

fn lattice_position(origin: Point, h: f64, ix: &LatticeIndex) -> Point {
    Point([0, 1, 2].map(|a| origin.0[a] + h * ix[a] as f64))
}

fn stencil_base(origin: Point, h: f64, d: usize, p: usize, x: &Point) -> (LatticeIndex, [f64; 3]) {
    let mut base = [0i64; 3];
    let mut off = [0.0; 3];
    for a in 0..d {
        let (b, t) = stencil_base_1d((x.0[a] - origin.0[a]) / h, p);
        base[a] = b;
        off[a] = t;
    }
    (base, off)
}

fn stencil_nodes(origin: Point, h: f64, d: usize, p: usize, x: &Point) -> Vec<LatticeIndex> {
    let (base, _) = stencil_base(origin, h, d, p, x);
    let q = p as i64 + 1;
    let nz = if d == 3 { q } else { 1 };
    let mut out = Vec::with_capacity((q * q * nz) as usize);
    for i in 0..q {
        for j in 0..q {
            for k in 0..nz {
                out.push([base[0] + i, base[1] + j, base[2] + k]);
            }
        }
    }
    out
}

fn nearest_lattice(origin: Point, h: f64, d: usize, x: &Point) -> LatticeIndex {
    let mut ix = [0i64; 3];
    for a in 0..d {
        ix[a] = ((x.0[a] - origin.0[a]) / h + 0.5).floor() as i64;
    }
    ix
}

/// Index box containing every node within `margin` of the surface.
fn index_box(surface: &Surface, h: f64, margin: f64) -> (LatticeIndex, LatticeIndex) {
    let (lo, hi) = surface.bounding_box();
    let mut a_lo = [0i64; 3];
    let mut a_hi = [0i64; 3];
    for a in 0..surface.dim() {
        a_lo[a] = ((lo.0[a] - margin) / h).floor() as i64 - 1;
        a_hi[a] = ((hi.0[a] + margin) / h).ceil() as i64 + 1;
    }
    (a_lo, a_hi)
}

fn check_inputs(surface: &Surface, h: f64, p: usize) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("grid spacing must be positive, got {h}")));
    }
    if p == 0 {
        return Err(Error::Config("interpolation degree must be at least 1".into()));
    }
    let _ = surface;
    Ok(())
}

/// Active tube radius: the largest distance from a point on the surface to a
/// node of its interpolation stencil.
pub fn tube_radius(h: f64, d: usize, p: usize) -> f64 {
    h * (d as f64).sqrt() * (p as f64 + 1.0) / 2.0
}

fn curvature_warning(surface: &Surface, radius: f64) -> Option<String> {
    let kappa = surface.curvature_bound()?;
    (kappa > 0.0 && radius >= 1.0 / kappa).then(|| {
        format!(
            "band radius {radius:.4e} is not below the inverse curvature bound {:.4e}",
            1.0 / kappa
        )
    })
}

/// Ghosts: axis neighbours of active nodes that are not themselves active.
fn collect_ghosts(
    d: usize,
    active: &[LatticeIndex],
    marks: &mut LatticeBox,
) -> Result<Vec<LatticeIndex>> {
    let mut ghost = Vec::new();
    for ix in active {
        for a in 0..d {
            for s in [-1i64, 1] {
                let mut n = *ix;
                n[a] += s;
                if marks.get(&n).is_none() {
                    marks.set(&n, 1)?;
                    ghost.push(n);
                }
            }
        }
    }
    Ok(ghost)
}

pub fn build_band_tube(surface: &Surface, h: f64, p: usize) -> Result<BandGrid> {
    check_inputs(surface, h, p)?;
    let d = surface.dim();
    let lambda = tube_radius(h, d, p);
    let (lo, hi) = index_box(surface, h, lambda + 2.0 * h);
    let mut marks = LatticeBox::new(lo, hi);
    let origin = Point::ZERO;
    // nodes exactly at the stencil reach (closest point on a lattice line)
    // must not be lost to rounding
    let cutoff = lambda * (1.0 + 1e-10);
    let within = |ix: &LatticeIndex| {
        let x = lattice_position(origin, h, ix);
        surface.closest_point(&x).dist <= cutoff
    };

    let mut active = Vec::new();
    let mut queue = VecDeque::new();
    for s in surface.sample_points(h) {
        let ix = nearest_lattice(origin, h, d, &s);
        if marks.get(&ix).is_none() && within(&ix) {
            marks.set(&ix, 0)?;
            queue.push_back(ix);
        }
    }
    // flood fill through axis neighbours inside the tube; rejected nodes
    // are marked too so each node is tested once
    let mut rejected = Vec::new();
    while let Some(ix) = queue.pop_front() {
        active.push(ix);
        for a in 0..d {
            for s in [-1i64, 1] {
                let mut n = ix;
                n[a] += s;
                if marks.get(&n).is_some() {
                    continue;
                }
                if within(&n) {
                    marks.set(&n, 0)?;
                    queue.push_back(n);
                } else {
                    marks.set(&n, 2)?;
                    rejected.push(n);
                }
            }
        }
    }
    if active.is_empty() {
        return Err(Error::EmptyBand { h });
    }
    for ix in rejected {
        marks.set(&ix, NONE)?;
    }
    let ghost = collect_ghosts(d, &active, &mut marks)?;
    let warnings = curvature_warning(surface, lambda).into_iter().collect();
    BandGrid::assemble(surface, h, p, BandMode::Tube, lambda, active, ghost, lo, hi, warnings)
}

pub fn build_band_algorithmic(surface: &Surface, h: f64, p: usize) -> Result<BandGrid> {
    check_inputs(surface, h, p)?;
    let d = surface.dim();
    let origin = Point::ZERO;
    let reach = tube_radius(h, d, p);
    let (lo, hi) = index_box(surface, h, reach + 2.0 * h);
    // 1 = active, 2 = ghost
    let mut marks = LatticeBox::new(lo, hi);
    let mut active = Vec::new();
    let mut frontier = VecDeque::new();
    let add_stencil = |x: &Point,
                           marks: &mut LatticeBox,
                           active: &mut Vec<LatticeIndex>,
                           frontier: &mut VecDeque<LatticeIndex>|
     -> Result<()> {
        for n in stencil_nodes(origin, h, d, p, x) {
            if marks.get(&n) != Some(1) {
                marks.set(&n, 1)?;
                active.push(n);
                frontier.push_back(n);
            }
        }
        Ok(())
    };
    for s in surface.sample_points(h / 2.0) {
        add_stencil(&s, &mut marks, &mut active, &mut frontier)?;
    }
    if active.is_empty() {
        return Err(Error::EmptyBand { h });
    }
    loop {
        while let Some(ix) = frontier.pop_front() {
            let cp = surface.closest_point(&lattice_position(origin, h, &ix)).cp;
            add_stencil(&cp, &mut marks, &mut active, &mut frontier)?;
        }
        // ghosts need complete extension rows too
        let mut grew = false;
        let snapshot = active.len();
        for i in 0..snapshot {
            let ix = active[i];
            for a in 0..d {
                for s in [-1i64, 1] {
                    let mut n = ix;
                    n[a] += s;
                    if marks.get(&n).is_some() {
                        continue;
                    }
                    marks.set(&n, 2)?;
                    let cp = surface.closest_point(&lattice_position(origin, h, &n)).cp;
                    let before = active.len();
                    add_stencil(&cp, &mut marks, &mut active, &mut frontier)?;
                    grew |= active.len() > before;
                }
            }
        }
        if !grew && frontier.is_empty() {
            break;
        }
        // re-derive ghosts from scratch on the next pass
        for i in 0..marks.slots.len() {
            if marks.slots[i] == 2 {
                marks.slots[i] = NONE;
            }
        }
    }
    let mut ghost = Vec::new();
    for i in 0..marks.slots.len() {
        if marks.slots[i] == 2 {
            marks.slots[i] = NONE;
        }
    }
    ghost.extend(collect_ghosts(d, &active, &mut marks)?);
    let lambda = active
        .iter()
        .map(|ix| surface.closest_point(&lattice_position(origin, h, ix)).dist)
        .fold(0.0, f64::max);
    let warnings = curvature_warning(surface, lambda).into_iter().collect();
    BandGrid::assemble(
        surface,
        h,
        p,
        BandMode::Algorithmic,
        lambda,
        active,
        ghost,
        lo,
        hi,
        warnings,
    )
}

/// Summary of a band, written as `mesh_stats.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandStats {
    pub h: f64,
    pub d: usize,
    pub p: usize,
    pub mode: BandMode,
    pub n_active: usize,
    pub n_ghost: usize,
    pub bbox_min_x: f64,
    pub bbox_min_y: f64,
    pub bbox_min_z: f64,
    pub bbox_max_x: f64,
    pub bbox_max_y: f64,
    pub bbox_max_z: f64,
    pub min_dist: f64,
    pub max_dist: f64,
    pub warnings: String,
}

pub fn band_stats(grid: &BandGrid) -> BandStats {
    let (lo, hi) = grid.bounding_box();
    let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
    for n in grid.nodes() {
        dmin = dmin.min(n.cp.dist);
        dmax = dmax.max(n.cp.dist);
    }
    BandStats {
        h: grid.h,
        d: grid.d,
        p: grid.p,
        mode: grid.mode,
        n_active: grid.n_active(),
        n_ghost: grid.n_ghost(),
        bbox_min_x: lo.0[0],
        bbox_min_y: lo.0[1],
        bbox_min_z: lo.0[2],
        bbox_max_x: hi.0[0],
        bbox_max_y: hi.0[1],
        bbox_max_z: hi.0[2],
        min_dist: dmin,
        max_dist: dmax,
        warnings: grid.warnings.join("; "),
    }
}

pub fn write_stats(path: &Path, stats: &BandStats) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.serialize(stats)?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_stats(path: &Path) -> Result<BandStats> {
    let mut r = csv::Reader::from_path(path)?;
    match r.deserialize().next() {
        Some(row) => Ok(row?),
        None => Err(Error::Parse {
            path: path.to_path_buf(),
            line: 2,
            message: "missing stats row".into(),
        }),
    }
}

/// Node dump: `role, ix, iy, iz, x, y, z, cpx, cpy, cpz, dist`.
pub fn write_nodes(path: &Path, grid: &BandGrid) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "role,ix,iy,iz,x,y,z,cpx,cpy,cpz,dist").map_err(io)?;
    for (i, n) in grid.nodes().iter().enumerate() {
        let role = if grid.is_active(i) { "active" } else { "ghost" };
        writeln!(
            w,
            "{role},{},{},{},{},{},{},{},{},{},{}",
            n.ix[0], n.ix[1], n.ix[2], n.x.0[0], n.x.0[1], n.x.0[2], n.cp.cp.0[0], n.cp.cp.0[1],
            n.cp.cp.0[2], n.cp.dist
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}
