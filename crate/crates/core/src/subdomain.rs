//! Overlapping subdomains: overlap growth, local ghost and boundary node
//! sets, the effective boundary point cloud Λ_j with the subsurface closest
//! point map, conormals, and cross-point flags.

use rayon::prelude::*;

use crate::band::BandGrid;
use crate::error::{Error, Result};
use crate::geometry::{Point, Surface};
use crate::partition::{NodeGraph, PartitionMap};

/// A node of Σ_j^BC together with its boundary geometry.
#[derive(Clone, Debug)]
pub struct BoundaryNode {
    /// Extended-ordering index.
    pub node: usize,
    /// Extra Robin completion layer (not an incomplete-stencil active node).
    pub is_ghost_type: bool,
    pub cp_local: Point,
    pub offset: Point,
    /// Surface normal at `cp_local`.
    pub normal: Point,
    /// Unit conormal, or zero when the offset is purely normal.
    pub conormal: Point,
    pub cross_flagged: bool,
}

#[derive(Clone, Debug)]
pub struct Subdomain {
    pub id: usize,
    /// Σ̃_j, sorted active indices.
    pub disjoint: Vec<usize>,
    /// Σ_j, sorted active indices (the restriction R_j).
    pub overlap: Vec<usize>,
    /// Nodes added by the last overlap pass.
    pub final_layer: Vec<usize>,
    /// Σ_j^G: global ghosts completing FD stencils of Σ_j.
    pub ghosts: Vec<usize>,
    /// Σ_j^BC: incomplete-stencil actives first, then the Robin ghost-type
    /// layer, each sorted by node index.
    pub bc: Vec<BoundaryNode>,
    /// Λ_j.
    pub boundary_points: Vec<Point>,
    /// Position of each Σ̃_j node inside `overlap`.
    pub disjoint_local: Vec<usize>,
    /// BC nodes whose closest boundary point needed the global fallback.
    pub fallback_count: usize,
}

impl Subdomain {
    pub fn n_local(&self) -> usize {
        self.overlap.len() + self.n_bc_active()
    }

    pub fn n_bc_active(&self) -> usize {
        self.bc.iter().filter(|b| !b.is_ghost_type).count()
    }
}

/// Overlap sets after `n_overlap` breadth-first layers, with the final layer
/// of each.
pub fn grow_overlap(
    graph: &NodeGraph,
    pmap: &PartitionMap,
    n_overlap: usize,
) -> Vec<(Vec<usize>, Vec<usize>)> {
    (0..pmap.n_parts)
        .into_par_iter()
        .map(|j| {
            let mut inside = vec![false; graph.len()];
            let mut set = pmap.members(j);
            for &v in &set {
                inside[v] = true;
            }
            let mut frontier = set.clone();
            let mut last = Vec::new();
            for _ in 0..n_overlap {
                let mut layer = Vec::new();
                for &v in &frontier {
                    for &w in graph.neighbors(v) {
                        if !inside[w] {
                            inside[w] = true;
                            layer.push(w);
                        }
                    }
                }
                if layer.is_empty() {
                    break;
                }
                layer.sort_unstable();
                set.extend_from_slice(&layer);
                frontier = layer.clone();
                last = layer;
            }
            set.sort_unstable();
            (set, last)
        })
        .collect()
}

/// Σ_j^G and Σ_j^BC node lists (extended indices) for a sorted overlap set.
/// Returns `(ghosts, bc_active, bc_ghost_type)`.
pub fn collect_ghost_and_bc(
    grid: &BandGrid,
    overlap: &[usize],
    robin: bool,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let n = grid.n_total();
    // 1 = Σ_j, 2 = Σ_j^G, 3 = BC active, 4 = BC ghost-type
    let mut role = vec![0u8; n];
    for &i in overlap {
        role[i] = 1;
    }
    let mut ghosts = Vec::new();
    let mut bc = Vec::new();
    let mut fd_neighbors = Vec::new();
    let lookup = |ix: &[i64; 3]| {
        grid.index_of(ix)
            .ok_or_else(|| Error::Band(format!("lattice node {ix:?} missing from band")))
    };
    for &i in overlap {
        for m in grid.axis_neighbors(&grid.node(i).ix) {
            let k = lookup(&m)?;
            fd_neighbors.push(k);
            if role[k] == 0 {
                if grid.is_active(k) {
                    role[k] = 3;
                    bc.push(k);
                } else {
                    role[k] = 2;
                    ghosts.push(k);
                }
            }
        }
    }
    // interpolation stencils of the closest points of every node whose
    // extension enters a PDE row of Σ_j
    let mut sources: Vec<usize> = overlap.to_vec();
    sources.extend(fd_neighbors);
    sources.sort_unstable();
    sources.dedup();
    for k in sources {
        for ix in grid.stencil(&grid.node(k).cp.cp) {
            let s = lookup(&ix)?;
            if !grid.is_active(s) {
                return Err(Error::Band(format!("stencil node {ix:?} is not active")));
            }
            if role[s] == 0 {
                role[s] = 3;
                bc.push(s);
            }
        }
    }
    let mut extra = Vec::new();
    if robin {
        for &b in &bc {
            for m in grid.axis_neighbors(&grid.node(b).ix) {
                let k = lookup(&m)?;
                if role[k] == 0 {
                    role[k] = 4;
                    extra.push(k);
                }
            }
        }
    }
    ghosts.sort_unstable();
    bc.sort_unstable();
    extra.sort_unstable();
    Ok((ghosts, bc, extra))
}

/// Visit radius around each boundary point when assigning closest points.
pub fn boundary_visit_radius(grid: &BandGrid) -> f64 {
    (grid.p as f64 + 1.0) * grid.h * (grid.d as f64).sqrt() / 2.0 + grid.h
}

/// Conormal as the tangential part of the offset, or zero when the offset
/// is (numerically) normal.
pub fn conormal(offset: &Point, normal: &Point) -> Point {
    let t = *offset - *normal * offset.dot(normal);
    let tn = t.norm();
    if tn <= 1e-12 * offset.norm() || tn == 0.0 {
        Point::ZERO
    } else {
        t * (1.0 / tn)
    }
}

/// Λ_j and per-node closest boundary points, offsets and conormals.
/// Returns the BC nodes (in the order given) and the fallback count.
pub fn build_boundary_geometry(
    surface: &Surface,
    grid: &BandGrid,
    final_layer: &[usize],
    bc_nodes: &[(usize, bool)],
) -> Result<(Vec<Point>, Vec<BoundaryNode>, usize)> {
    let lambda: Vec<Point> = final_layer.iter().map(|&i| grid.node(i).cp.cp).collect();
    if bc_nodes.is_empty() {
        return Ok((lambda, Vec::new(), 0));
    }
    if lambda.is_empty() {
        return Err(Error::Transmission(
            "subdomain has boundary nodes but no final overlap layer".into(),
        ));
    }
    let mut slot = std::collections::HashMap::with_capacity(bc_nodes.len());
    for (s, &(node, _)) in bc_nodes.iter().enumerate() {
        slot.insert(node, s);
    }
    let radius = boundary_visit_radius(grid);
    let reach = (radius / grid.h).ceil() as i64;
    let mut best: Vec<Option<(f64, usize)>> = vec![None; bc_nodes.len()];
    for (li, y) in lambda.iter().enumerate() {
        let t = grid.lattice_coords(y);
        let c = [0, 1, 2].map(|a| if a < grid.d { t[a].round() as i64 } else { 0 });
        let zr = if grid.d == 3 { reach } else { 0 };
        for i in -reach..=reach {
            for j in -reach..=reach {
                for k in -zr..=zr {
                    let ix = [c[0] + i, c[1] + j, c[2] + k];
                    let Some(node) = grid.index_of(&ix) else { continue };
                    let Some(&s) = slot.get(&node) else { continue };
                    let dist = grid.node(node).x.dist(y);
                    if dist > radius {
                        continue;
                    }
                    if best[s].is_none_or(|(d, _)| dist < d) {
                        best[s] = Some((dist, li));
                    }
                }
            }
        }
    }
    let mut fallback = 0;
    let mut out = Vec::with_capacity(bc_nodes.len());
    for (s, &(node, is_ghost_type)) in bc_nodes.iter().enumerate() {
        let x = grid.node(node).x;
        let li = match best[s] {
            Some((_, li)) => li,
            None => {
                fallback += 1;
                let mut arg = 0;
                for (k, y) in lambda.iter().enumerate() {
                    if x.dist(y) < x.dist(&lambda[arg]) {
                        arg = k;
                    }
                }
                arg
            }
        };
        let cp_local = lambda[li];
        let normal = surface.closest_point(&cp_local).normal;
        let offset = x - cp_local;
        out.push(BoundaryNode {
            node,
            is_ghost_type,
            cp_local,
            offset,
            normal,
            conormal: conormal(&offset, &normal),
            cross_flagged: false,
        });
    }
    Ok((lambda, out, fallback))
}

/// Disjoint nodes with graph neighbours in at least two other parts.
pub fn find_cross_nodes(graph: &NodeGraph, pmap: &PartitionMap) -> Vec<usize> {
    (0..graph.len())
        .filter(|&v| {
            let mut others: Vec<usize> = graph
                .neighbors(v)
                .iter()
                .map(|&w| pmap.part[w])
                .filter(|&q| q != pmap.part[v])
                .collect();
            others.sort_unstable();
            others.dedup();
            others.len() >= 2
        })
        .collect()
}

/// Flag every BC node within `2·N_O·h` of a cross node. Returns the cross
/// nodes.
pub fn find_cross_points(
    grid: &BandGrid,
    graph: &NodeGraph,
    pmap: &PartitionMap,
    subdomains: &mut [Subdomain],
    n_overlap: usize,
) -> Vec<usize> {
    let cross = find_cross_nodes(graph, pmap);
    let radius = 2.0 * n_overlap as f64 * grid.h;
    let reach = (radius / grid.h).ceil() as i64;
    let mut near = vec![false; grid.n_total()];
    for &c in &cross {
        let ix = grid.node(c).ix;
        let x = grid.node(c).x;
        let zr = if grid.d == 3 { reach } else { 0 };
        for i in -reach..=reach {
            for j in -reach..=reach {
                for k in -zr..=zr {
                    if let Some(node) = grid.index_of(&[ix[0] + i, ix[1] + j, ix[2] + k]) {
                        if grid.node(node).x.dist(&x) <= radius {
                            near[node] = true;
                        }
                    }
                }
            }
        }
    }
    for sub in subdomains.iter_mut() {
        for b in sub.bc.iter_mut() {
            b.cross_flagged = near[b.node];
        }
    }
    cross
}

/// Build all subdomains for an aligned partition.
pub fn build_subdomains(
    surface: &Surface,
    grid: &BandGrid,
    graph: &NodeGraph,
    pmap: &PartitionMap,
    n_overlap: usize,
    robin: bool,
) -> Result<Vec<Subdomain>> {
    if n_overlap == 0 {
        return Err(Error::Config("overlap N_O must be at least 1".into()));
    }
    let grown = grow_overlap(graph, pmap, n_overlap);
    let mut subs: Vec<Subdomain> = grown
        .into_par_iter()
        .enumerate()
        .map(|(j, (overlap, final_layer))| -> Result<Subdomain> {
            let disjoint = pmap.members(j);
            let (ghosts, bc_active, bc_extra) = collect_ghost_and_bc(grid, &overlap, robin)?;
            let bc_list: Vec<(usize, bool)> = bc_active
                .iter()
                .map(|&i| (i, false))
                .chain(bc_extra.iter().map(|&i| (i, true)))
                .collect();
            let (boundary_points, bc, fallback_count) = if robin {
                build_boundary_geometry(surface, grid, &final_layer, &bc_list)?
            } else {
                let pts = final_layer.iter().map(|&i| grid.node(i).cp.cp).collect();
                let bc = bc_list
                    .iter()
                    .map(|&(node, g)| BoundaryNode {
                        node,
                        is_ghost_type: g,
                        cp_local: grid.node(node).cp.cp,
                        offset: Point::ZERO,
                        normal: grid.node(node).cp.normal,
                        conormal: Point::ZERO,
                        cross_flagged: false,
                    })
                    .collect();
                (pts, bc, 0)
            };
            if fallback_count > 0 {
                log::debug!("subdomain {j}: {fallback_count} boundary nodes used the global closest-point fallback");
            }
            let disjoint_local = disjoint
                .iter()
                .map(|v| overlap.binary_search(v).expect("disjoint ⊆ overlap"))
                .collect();
            Ok(Subdomain {
                id: j,
                disjoint,
                overlap,
                final_layer,
                ghosts,
                bc,
                boundary_points,
                disjoint_local,
                fallback_count,
            })
        })
        .collect::<Result<_>>()?;
    let total_fallback: usize = subs.iter().map(|s| s.fallback_count).sum();
    if total_fallback > 0 {
        log::info!("{total_fallback} boundary nodes were outside the visit radius of Λ_j; used global argmin");
    }
    find_cross_points(grid, graph, pmap, &mut subs, n_overlap);
    Ok(subs)
}
