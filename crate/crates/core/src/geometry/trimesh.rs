//! Triangle mesh closest-point queries accelerated by a uniform spatial hash.

use std::collections::HashMap;

use super::{CpResult, Point};
use crate::error::{Error, Result};

/// Closest feature of a triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feature {
    Face,
    /// Edge between local corners `(i, (i + 1) % 3)`.
    Edge(u8),
    Vertex(u8),
}

#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    face_normals: Vec<Point>,
    vertex_normals: Vec<Point>,
    edge_normals: HashMap<(usize, usize), Point>,
    grid: SpatialHash,
    /// Degenerate triangles dropped at construction.
    pub skipped_degenerate: usize,
    /// User supplied curvature bound; meshes carry none by default.
    pub curvature_bound: Option<f64>,
}

#[derive(Clone, Debug)]
struct SpatialHash {
    cell: f64,
    lo: [i64; 3],
    hi: [i64; 3],
    cells: HashMap<[i64; 3], Vec<u32>>,
}

impl SpatialHash {
    fn key(&self, x: &Point) -> [i64; 3] {
        let mut k = [0i64; 3];
        for a in 0..3 {
            k[a] = (x.0[a] / self.cell).floor() as i64;
        }
        k
    }
}

impl TriMesh {
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidSurface(format!(
                    "triangle {t} references a vertex out of range"
                )));
            }
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSurface("non-finite vertex".into()));
        }
        let mut kept = Vec::with_capacity(triangles.len());
        let mut face_normals = Vec::with_capacity(triangles.len());
        let mut skipped = 0;
        for tri in triangles {
            let [a, b, c] = tri.map(|i| vertices[i]);
            let n = (b - a).cross(&(c - a));
            let scale = (b - a).norm_sq().max((c - a).norm_sq());
            match n.normalized() {
                Some(unit) if n.norm() > 1e-14 * scale => {
                    kept.push(tri);
                    face_normals.push(unit);
                }
                _ => skipped += 1,
            }
        }
        if kept.is_empty() {
            return Err(Error::InvalidSurface("mesh has no non-degenerate triangles".into()));
        }
        if skipped > 0 {
            log::warn!("skipped {skipped} degenerate triangles");
        }

        let mut vertex_normals = vec![Point::ZERO; vertices.len()];
        let mut edge_normals: HashMap<(usize, usize), Point> = HashMap::new();
        for (tri, n) in kept.iter().zip(&face_normals) {
            for i in 0..3 {
                let (v, v1, v2) = (tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]);
                let e1 = (vertices[v1] - vertices[v]).normalized().unwrap();
                let e2 = (vertices[v2] - vertices[v]).normalized().unwrap();
                let angle = e1.dot(&e2).clamp(-1.0, 1.0).acos();
                vertex_normals[v] += *n * angle;
                let key = (v.min(v1), v.max(v1));
                *edge_normals.entry(key).or_insert(Point::ZERO) += *n;
            }
        }
        for n in vertex_normals.iter_mut() {
            *n = n.normalized().unwrap_or(Point::ZERO);
        }
        for n in edge_normals.values_mut() {
            *n = n.normalized().unwrap_or(Point::ZERO);
        }

        let grid = build_hash(&vertices, &kept);
        Ok(TriMesh {
            vertices,
            triangles: kept,
            face_normals,
            vertex_normals,
            edge_normals,
            grid,
            skipped_degenerate: skipped,
            curvature_bound: None,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point([f64::INFINITY; 3]);
        let mut hi = Point([f64::NEG_INFINITY; 3]);
        for v in &self.vertices {
            for a in 0..3 {
                lo.0[a] = lo.0[a].min(v.0[a]);
                hi.0[a] = hi.0[a].max(v.0[a]);
            }
        }
        (lo, hi)
    }

    /// Uniform rescale about the bounding-box centre so that the y extent
    /// equals `height`.
    pub fn scaled_to_height(self, height: f64) -> Result<Self> {
        let (lo, hi) = self.bounding_box();
        let extent = hi.0[1] - lo.0[1];
        if !(extent > 0.0) || !(height > 0.0) {
            return Err(Error::InvalidSurface("cannot rescale a flat mesh".into()));
        }
        let s = height / extent;
        let centre = (lo + hi) * 0.5;
        let vertices = self
            .vertices
            .iter()
            .map(|v| centre + (*v - centre) * s)
            .collect();
        let bound = self.curvature_bound.map(|k| k / s);
        let mut m = TriMesh::new(vertices, self.triangles)?;
        m.curvature_bound = bound;
        Ok(m)
    }

    /// Closest point on triangle `t`, with the feature it lies on.
    pub fn closest_on_triangle(&self, t: usize, x: &Point) -> (Point, Feature) {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        closest_point_triangle(x, &a, &b, &c)
    }

    fn pseudo_normal(&self, t: usize, feature: Feature) -> Point {
        let tri = self.triangles[t];
        match feature {
            Feature::Face => self.face_normals[t],
            Feature::Vertex(i) => self.vertex_normals[tri[i as usize]],
            Feature::Edge(i) => {
                let (u, v) = (tri[i as usize], tri[(i as usize + 1) % 3]);
                self.edge_normals[&(u.min(v), u.max(v))]
            }
        }
    }

    pub fn closest_point(&self, x: &Point) -> CpResult {
        let g = &self.grid;
        let k = g.key(x);
        let mut best: Option<(f64, usize, Point, Feature)> = None;
        let mut visited = std::collections::HashSet::new();
        // rings of cells at Chebyshev distance r around the query cell
        let max_ring = (0..3)
            .map(|a| (k[a] - g.lo[a]).abs().max((g.hi[a] - k[a]).abs()))
            .max()
            .unwrap_or(0);
        for r in 0..=max_ring {
            if let Some((d, ..)) = best {
                if d <= (r - 1).max(0) as f64 * g.cell {
                    break;
                }
            }
            for_each_ring_cell(k, r, |key| {
                if let Some(list) = g.cells.get(&key) {
                    for &t in list {
                        if !visited.insert(t) {
                            continue;
                        }
                        let (p, f) = self.closest_on_triangle(t as usize, x);
                        let d = x.dist(&p);
                        if best.map_or(true, |(bd, bt, ..)| d < bd || (d == bd && (t as usize) < bt)) {
                            best = Some((d, t as usize, p, f));
                        }
                    }
                }
            });
        }
        let (_, t, cp, f) = best.expect("mesh has at least one triangle");
        CpResult::new(x, cp, self.pseudo_normal(t, f))
    }

    pub fn sample_points(&self, spacing: f64) -> Vec<Point> {
        let mut out = Vec::new();
        for tri in &self.triangles {
            let [a, b, c] = tri.map(|i| self.vertices[i]);
            let longest = a.dist(&b).max(b.dist(&c)).max(c.dist(&a));
            let n = ((longest / spacing).ceil() as usize).max(1);
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                    out.push(a + (b - a) * u + (c - a) * v);
                }
            }
        }
        out
    }
}

fn build_hash(vertices: &[Point], triangles: &[[usize; 3]]) -> SpatialHash {
    let mut cell: f64 = 0.0;
    for tri in triangles {
        let (lo, hi) = tri_bbox(vertices, tri);
        for a in 0..3 {
            cell = cell.max(hi.0[a] - lo.0[a]);
        }
    }
    if !(cell > 0.0) {
        cell = 1.0;
    }
    let mut g = SpatialHash {
        cell,
        lo: [i64::MAX; 3],
        hi: [i64::MIN; 3],
        cells: HashMap::new(),
    };
    for (t, tri) in triangles.iter().enumerate() {
        let (lo, hi) = tri_bbox(vertices, tri);
        let (klo, khi) = (g.key(&lo), g.key(&hi));
        for a in 0..3 {
            g.lo[a] = g.lo[a].min(klo[a]);
            g.hi[a] = g.hi[a].max(khi[a]);
        }
        for i in klo[0]..=khi[0] {
            for j in klo[1]..=khi[1] {
                for k in klo[2]..=khi[2] {
                    g.cells.entry([i, j, k]).or_default().push(t as u32);
                }
            }
        }
    }
    g
}

fn tri_bbox(vertices: &[Point], tri: &[usize; 3]) -> (Point, Point) {
    let mut lo = Point([f64::INFINITY; 3]);
    let mut hi = Point([f64::NEG_INFINITY; 3]);
    for &v in tri {
        for a in 0..3 {
            lo.0[a] = lo.0[a].min(vertices[v].0[a]);
            hi.0[a] = hi.0[a].max(vertices[v].0[a]);
        }
    }
    (lo, hi)
}

fn for_each_ring_cell(c: [i64; 3], r: i64, mut f: impl FnMut([i64; 3])) {
    if r == 0 {
        f(c);
        return;
    }
    for i in -r..=r {
        for j in -r..=r {
            let on_shell = i.abs() == r || j.abs() == r;
            if on_shell {
                for k in -r..=r {
                    f([c[0] + i, c[1] + j, c[2] + k]);
                }
            } else {
                f([c[0] + i, c[1] + j, c[2] - r]);
                f([c[0] + i, c[1] + j, c[2] + r]);
            }
        }
    }
}

/// Closest point on triangle `abc` to `p` by Voronoi-region classification.
fn closest_point_triangle(p: &Point, a: &Point, b: &Point, c: &Point) -> (Point, Feature) {
    let ab = *b - *a;
    let ac = *c - *a;
    let ap = *p - *a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, Feature::Vertex(0));
    }
    let bp = *p - *b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, Feature::Vertex(1));
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (*a + ab * v, Feature::Edge(0));
    }
    let cp = *p - *c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, Feature::Vertex(2));
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (*a + ac * w, Feature::Edge(2));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (*b + (*c - *b) * w, Feature::Edge(1));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (*a + ab * v + ac * w, Feature::Face)
}
