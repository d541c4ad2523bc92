#![allow(dead_code)]

use std::collections::HashMap;

use cpmdd::band::{BandGrid, BandMode};
use cpmdd::geometry::{Point, Surface, TriMesh};
use cpmdd::manufactured::{evaluate, Rhs};
use cpmdd::pipeline::Problem;

/// Subdivided icosahedron projected to the unit sphere.
pub fn icosphere(levels: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Point> = [
        (-1.0, t, 0.0), (1.0, t, 0.0), (-1.0, -t, 0.0), (1.0, -t, 0.0),
        (0.0, -1.0, t), (0.0, 1.0, t), (0.0, -1.0, -t), (0.0, 1.0, -t),
        (t, 0.0, -1.0), (t, 0.0, 1.0), (-t, 0.0, -1.0), (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point::new(x, y, z).normalized().unwrap())
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(f.len() * 4);
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Point>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                v.push(((v[a] + v[b]) * 0.5).normalized().unwrap());
                v.len() - 1
            })
        };
        for [a, b, c] in f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    TriMesh::new(v, f).unwrap()
}

pub fn circle_problem(h: f64) -> (Problem, Vec<f64>) {
    let pb = Problem::build(Surface::circle(1.0).unwrap(), h, 3, BandMode::Tube, 1.0).unwrap();
    let (f, _) = evaluate(&Rhs::Manufactured { k: 2.0 }, &pb.surface, &pb.grid, 1.0).unwrap();
    (pb, f)
}

pub fn sphere_problem(h: f64) -> (Problem, Vec<f64>) {
    let pb = Problem::build(Surface::sphere(1.0).unwrap(), h, 2, BandMode::Tube, 1.0).unwrap();
    let (f, _) = evaluate(&Rhs::Manufactured { k: 2.0 }, &pb.surface, &pb.grid, 1.0).unwrap();
    (pb, f)
}

pub fn grid(surface: &Surface, h: f64, p: usize) -> BandGrid {
    BandGrid::build(surface, h, p, BandMode::Tube).unwrap()
}

/// Restricted additive Schwarz built purely algebraically from `A`:
/// `Σ_j R̃_jᵀ (R_j A R_jᵀ)⁻¹ R_j`.
pub struct AlgebraicRas {
    parts: Vec<(Vec<usize>, Vec<usize>, cpmdd::lu::SparseLu)>,
}

impl AlgebraicRas {
    pub fn new(a: &cpmdd::sparse::SparseOperator, subs: &[cpmdd::subdomain::Subdomain]) -> Self {
        let parts = subs
            .iter()
            .map(|s| {
                let mut map = vec![None; a.ncols()];
                for (l, &i) in s.overlap.iter().enumerate() {
                    map[i] = Some(l);
                }
                let aj = a.select(&s.overlap, &map, s.overlap.len());
                (s.overlap.clone(), s.disjoint.clone(), cpmdd::lu::SparseLu::factor(&aj).unwrap())
            })
            .collect();
        AlgebraicRas { parts }
    }
}

impl cpmdd::solve::Preconditioner for AlgebraicRas {
    fn apply(&self, r: &[f64]) -> cpmdd::Result<Vec<f64>> {
        let mut z = vec![0.0; r.len()];
        for (overlap, disjoint, lu) in &self.parts {
            let rj: Vec<f64> = overlap.iter().map(|&i| r[i]).collect();
            let zj = lu.solve(&rj);
            for &i in disjoint {
                z[i] = zj[overlap.binary_search(&i).unwrap()];
            }
        }
        Ok(z)
    }
}
