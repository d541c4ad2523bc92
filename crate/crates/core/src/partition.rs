//! Node graph, native multilevel recursive-bisection partitioner, partition
//! files, and alignment of partition interfaces with surface normals.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::band::BandGrid;
use crate::error::{Error, Result};

/// Undirected graph over active nodes; edges join active axis neighbours.
#[derive(Clone, Debug)]
pub struct NodeGraph {
    ptr: Vec<usize>,
    adj: Vec<usize>,
}

impl NodeGraph {
    pub fn from_adjacency(lists: Vec<Vec<usize>>) -> Self {
        let mut ptr = vec![0];
        let mut adj = Vec::new();
        for mut l in lists {
            l.sort_unstable();
            l.dedup();
            adj.extend(l);
            ptr.push(adj.len());
        }
        NodeGraph { ptr, adj }
    }

    pub fn len(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }

    pub fn n_edges(&self) -> usize {
        self.adj.len() / 2
    }

    /// Connected-component label per node, numbered in order of the
    /// smallest member.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let n = self.len();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = count;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &w in self.neighbors(v) {
                    if comp[w] == usize::MAX {
                        comp[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        (count, comp)
    }
}

pub fn build_graph(grid: &BandGrid) -> NodeGraph {
    let lists = grid
        .active()
        .iter()
        .map(|n| {
            grid.axis_neighbors(&n.ix)
                .filter_map(|m| grid.index_of(&m).filter(|&k| grid.is_active(k)))
                .collect()
        })
        .collect();
    NodeGraph::from_adjacency(lists)
}

/// Disjoint assignment of active nodes to subdomains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionMap {
    pub part: Vec<usize>,
    pub n_parts: usize,
}

impl PartitionMap {
    /// Validates that every id in `0..n_parts` is used.
    pub fn new(part: Vec<usize>, n_parts: usize) -> Result<Self> {
        let mut sizes = vec![0usize; n_parts];
        for &p in &part {
            if p >= n_parts {
                return Err(Error::Partition(format!("part id {p} out of range 0..{n_parts}")));
            }
            sizes[p] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Partition(format!("part {empty} is empty")));
        }
        Ok(PartitionMap { part, n_parts })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_parts];
        for &p in &self.part {
            s[p] += 1;
        }
        s
    }

    pub fn members(&self, j: usize) -> Vec<usize> {
        (0..self.part.len()).filter(|&i| self.part[i] == j).collect()
    }
}

pub fn save_partition(path: &Path, pmap: &PartitionMap) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for p in &pmap.part {
        writeln!(w, "{p}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a partition file (one id per line); the part count is inferred.
pub fn load_partition(path: &Path, n_active: usize) -> Result<PartitionMap> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut part = Vec::with_capacity(n_active);
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        part.push(t.parse::<usize>().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("bad part id {t:?}"),
        })?);
    }
    if part.len() != n_active {
        return Err(Error::Partition(format!(
            "partition file has {} entries, band has {n_active} active nodes",
            part.len()
        )));
    }
    let n_parts = part.iter().max().map_or(0, |m| m + 1);
    PartitionMap::new(part, n_parts)
}

/// Weighted graph used during coarsening.
#[derive(Clone, Debug)]
struct WGraph {
    ptr: Vec<usize>,
    adj: Vec<usize>,
    ewt: Vec<i64>,
    vwt: Vec<i64>,
}

impl WGraph {
    fn len(&self) -> usize {
        self.vwt.len()
    }

    fn edges(&self, v: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        (self.ptr[v]..self.ptr[v + 1]).map(move |k| (self.adj[k], self.ewt[k]))
    }

    fn total_weight(&self) -> i64 {
        self.vwt.iter().sum()
    }

    /// Induced subgraph on `nodes` (whose order defines the new numbering).
    fn subgraph(&self, nodes: &[usize]) -> WGraph {
        let mut local = vec![usize::MAX; self.len()];
        for (i, &v) in nodes.iter().enumerate() {
            local[v] = i;
        }
        let mut g = WGraph {
            ptr: vec![0],
            adj: Vec::new(),
            ewt: Vec::new(),
            vwt: Vec::with_capacity(nodes.len()),
        };
        for &v in nodes {
            for (w, e) in self.edges(v) {
                if local[w] != usize::MAX {
                    g.adj.push(local[w]);
                    g.ewt.push(e);
                }
            }
            g.ptr.push(g.adj.len());
            g.vwt.push(self.vwt[v]);
        }
        g
    }

    /// Heavy-edge matching contraction; returns the coarse graph and the
    /// fine-to-coarse map.
    fn coarsen(&self, rng: &mut ChaCha8Rng) -> (WGraph, Vec<usize>) {
        let n = self.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut mate = vec![usize::MAX; n];
        for &v in &order {
            if mate[v] != usize::MAX {
                continue;
            }
            let mut best = v;
            let mut best_w = -1;
            for (w, e) in self.edges(v) {
                if mate[w] == usize::MAX && w != v && e > best_w {
                    best = w;
                    best_w = e;
                }
            }
            mate[v] = best;
            mate[best] = v;
        }
        let mut cmap = vec![usize::MAX; n];
        let mut nc = 0;
        for v in 0..n {
            if cmap[v] == usize::MAX {
                cmap[v] = nc;
                cmap[mate[v]] = nc;
                nc += 1;
            }
        }
        let mut g = WGraph {
            ptr: vec![0],
            adj: Vec::new(),
            ewt: Vec::new(),
            vwt: vec![0; nc],
        };
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); nc];
        for v in 0..n {
            members[cmap[v]].push(v);
            g.vwt[cmap[v]] += self.vwt[v];
        }
        let mut acc = vec![0i64; nc];
        let mut seen = vec![usize::MAX; nc];
        let mut cols = Vec::new();
        for c in 0..nc {
            cols.clear();
            for &v in &members[c] {
                for (w, e) in self.edges(v) {
                    let cw = cmap[w];
                    if cw == c {
                        continue;
                    }
                    if seen[cw] != c {
                        seen[cw] = c;
                        acc[cw] = 0;
                        cols.push(cw);
                    }
                    acc[cw] += e;
                }
            }
            cols.sort_unstable();
            for &cw in &cols {
                g.adj.push(cw);
                g.ewt.push(acc[cw]);
            }
            g.ptr.push(g.adj.len());
        }
        (g, cmap)
    }
}

/// Side weights allowed for a bisection targeting `target0` on side 0.
#[derive(Clone, Copy)]
struct Balance {
    lo0: i64,
    hi0: i64,
}

impl Balance {
    fn new(total: i64, target0: i64, eps: f64, max_vwt: i64) -> Self {
        let slack = ((eps * total as f64).ceil() as i64).max(max_vwt);
        Balance {
            lo0: target0 - slack,
            hi0: target0 + slack,
        }
    }

    fn ok(&self, w0: i64) -> bool {
        w0 >= self.lo0 && w0 <= self.hi0
    }

    /// Distance outside the allowed window (0 when balanced).
    fn violation(&self, w0: i64) -> i64 {
        (self.lo0 - w0).max(w0 - self.hi0).max(0)
    }
}

fn cut(g: &WGraph, side: &[u8]) -> i64 {
    let mut c = 0;
    for v in 0..g.len() {
        for (w, e) in g.edges(v) {
            if side[v] != side[w] {
                c += e;
            }
        }
    }
    c / 2
}

/// Farthest node from `start` by BFS (ties to smallest index).
fn bfs_far(g: &WGraph, start: usize) -> (usize, usize) {
    let mut dist = vec![usize::MAX; g.len()];
    dist[start] = 0;
    let mut queue = std::collections::VecDeque::from([start]);
    let mut far = (start, 0);
    while let Some(v) = queue.pop_front() {
        if dist[v] > far.1 || (dist[v] == far.1 && v < far.0) {
            far = (v, dist[v]);
        }
        for (w, _) in g.edges(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    far
}

fn pseudo_peripheral_pair(g: &WGraph) -> (usize, usize) {
    let mut a = 0;
    let (mut b, mut ecc) = bfs_far(g, a);
    for _ in 0..8 {
        let (c, e) = bfs_far(g, b);
        if e <= ecc {
            break;
        }
        a = b;
        b = c;
        ecc = e;
    }
    (a, b)
}

/// Greedy graph growing of side 0 from `seed` until it holds `target0`:
/// always absorb the frontier node that most reduces the cut.
fn grow(g: &WGraph, seed: usize, target0: i64) -> Vec<u8> {
    let n = g.len();
    let mut side = vec![1u8; n];
    // gain of moving a side-1 node to side 0
    let mut gain: Vec<i64> = (0..n).map(|v| -g.edges(v).map(|(_, e)| e).sum::<i64>()).collect();
    let mut heap = BinaryHeap::new();
    let mut w0 = 0;
    let mut next_seed = 0;
    heap.push((gain[seed], Reverse(seed)));
    while w0 < target0 {
        let Some((gv, Reverse(v))) = heap.pop() else {
            // disconnected remainder: restart from the next free node
            while next_seed < n && side[next_seed] == 0 {
                next_seed += 1;
            }
            if next_seed == n {
                break;
            }
            heap.push((gain[next_seed], Reverse(next_seed)));
            continue;
        };
        if side[v] == 0 || gv != gain[v] {
            continue;
        }
        side[v] = 0;
        w0 += g.vwt[v];
        for (w, e) in g.edges(v) {
            if side[w] == 1 {
                gain[w] += 2 * e;
                heap.push((gain[w], Reverse(w)));
            }
        }
    }
    side
}

/// Boundary Fiduccia–Mattheyses refinement of a bisection.
fn refine(g: &WGraph, side: &mut [u8], bal: Balance, passes: usize) {
    let n = g.len();
    let mut w0: i64 = (0..n).filter(|&v| side[v] == 0).map(|v| g.vwt[v]).sum();
    let gain_of = |side: &[u8], v: usize| -> i64 {
        let mut gsum = 0;
        for (w, e) in g.edges(v) {
            gsum += if side[w] != side[v] { e } else { -e };
        }
        gsum
    };
    for _ in 0..passes {
        let mut locked = vec![false; n];
        let mut gain = vec![0i64; n];
        let mut heaps = [BinaryHeap::new(), BinaryHeap::new()];
        for v in 0..n {
            let boundary = g.edges(v).any(|(w, _)| side[w] != side[v]);
            if boundary || !bal.ok(w0) {
                gain[v] = gain_of(side, v);
                heaps[side[v] as usize].push((gain[v], Reverse(v)));
            }
        }
        let start_cut = cut(g, side);
        let mut cur = start_cut;
        let mut best = (bal.violation(w0), start_cut, 0usize);
        let mut moves: Vec<usize> = Vec::new();
        let mut since_best = 0;
        loop {
            // choose the side to move from: the heavier one when out of
            // balance, otherwise the better admissible gain
            let mut pick: Option<(i64, usize, usize)> = None;
            for s in 0..2 {
                while let Some(&(gv, Reverse(v))) = heaps[s].peek() {
                    if locked[v] || side[v] as usize != s || gv != gain[v] {
                        heaps[s].pop();
                    } else {
                        break;
                    }
                }
                if let Some(&(gv, Reverse(v))) = heaps[s].peek() {
                    let nw0 = if s == 0 { w0 - g.vwt[v] } else { w0 + g.vwt[v] };
                    let admissible = bal.ok(nw0) || bal.violation(nw0) < bal.violation(w0);
                    if admissible && pick.is_none_or(|(pg, _, _)| gv > pg) {
                        pick = Some((gv, v, s));
                    }
                }
            }
            let Some((gv, v, s)) = pick else { break };
            heaps[s].pop();
            locked[v] = true;
            side[v] = 1 - side[v];
            w0 += if s == 0 { -g.vwt[v] } else { g.vwt[v] };
            cur -= gv;
            moves.push(v);
            for (w, _) in g.edges(v) {
                if !locked[w] {
                    gain[w] = gain_of(side, w);
                    heaps[side[w] as usize].push((gain[w], Reverse(w)));
                }
            }
            let key = (bal.violation(w0), cur, moves.len());
            if (key.0, key.1) < (best.0, best.1) {
                best = key;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > 100.max(n / 50) {
                    break;
                }
            }
        }
        // roll back past the best prefix
        for &v in moves[best.2..].iter().rev() {
            let s = side[v];
            side[v] = 1 - s;
            w0 += if s == 0 { -g.vwt[v] } else { g.vwt[v] };
        }
        if best.1 >= start_cut && best.0 == 0 {
            break;
        }
    }
}

const COARSEST: usize = 96;

fn multilevel_bisect(g: &WGraph, target0: i64, eps: f64, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let max_vwt = g.vwt.iter().copied().max().unwrap_or(1);
    let bal = Balance::new(g.total_weight(), target0, eps, max_vwt);
    if g.len() <= COARSEST {
        let (a, b) = pseudo_peripheral_pair(g);
        let mut best: Option<(i64, i64, Vec<u8>)> = None;
        for seed in [a, b] {
            let mut side = grow(g, seed, target0);
            refine(g, &mut side, bal, 8);
            let w0: i64 = (0..g.len()).filter(|&v| side[v] == 0).map(|v| g.vwt[v]).sum();
            let key = (bal.violation(w0), cut(g, &side));
            if best.as_ref().is_none_or(|(v, c, _)| key < (*v, *c)) {
                best = Some((key.0, key.1, side));
            }
        }
        return best.unwrap().2;
    }
    let (coarse, cmap) = g.coarsen(rng);
    if coarse.len() * 10 > g.len() * 9 {
        // matching stalled; bisect this level directly
        let (a, _) = pseudo_peripheral_pair(g);
        let mut side = grow(g, a, target0);
        refine(g, &mut side, bal, 8);
        return side;
    }
    let cside = multilevel_bisect(&coarse, target0, eps, rng);
    let mut side: Vec<u8> = cmap.iter().map(|&c| cside[c]).collect();
    refine(g, &mut side, bal, 4);
    side
}

fn recursive_bisect(
    g: &WGraph,
    nodes: &[usize],
    k: usize,
    first: usize,
    out: &mut [usize],
    rng: &mut ChaCha8Rng,
) {
    if k == 1 {
        for &v in nodes {
            out[v] = first;
        }
        return;
    }
    let sub = g.subgraph(nodes);
    let k0 = k / 2;
    let target0 = (sub.total_weight() as f64 * k0 as f64 / k as f64).round() as i64;
    let side = multilevel_bisect(&sub, target0, 0.01, rng);
    let (mut n0, mut n1) = (Vec::new(), Vec::new());
    for (i, &v) in nodes.iter().enumerate() {
        if side[i] == 0 {
            n0.push(v);
        } else {
            n1.push(v);
        }
    }
    recursive_bisect(g, &n0, k0, first, out, rng);
    recursive_bisect(g, &n1, k - k0, first + k0, out, rng);
}

/// Reassign every non-largest component of a part to the neighbouring part
/// it shares the most edges with.
fn enforce_connectivity(graph: &NodeGraph, part: &mut [usize], n_parts: usize) {
    for _round in 0..4 * n_parts.max(1) {
        let n = graph.len();
        let mut comp = vec![usize::MAX; n];
        let mut comps: Vec<(usize, Vec<usize>)> = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut members = vec![s];
            comp[s] = id;
            let mut head = 0;
            while head < members.len() {
                let v = members[head];
                head += 1;
                for &w in graph.neighbors(v) {
                    if comp[w] == usize::MAX && part[w] == part[s] {
                        comp[w] = id;
                        members.push(w);
                    }
                }
            }
            comps.push((part[s], members));
        }
        let mut largest = vec![usize::MAX; n_parts];
        for (id, (p, m)) in comps.iter().enumerate() {
            if largest[*p] == usize::MAX || comps[largest[*p]].1.len() < m.len() {
                largest[*p] = id;
            }
        }
        let mut changed = false;
        for (id, (p, members)) in comps.iter().enumerate() {
            if largest[*p] == id {
                continue;
            }
            let mut votes = vec![0usize; n_parts];
            for &v in members {
                for &w in graph.neighbors(v) {
                    if part[w] != *p {
                        votes[part[w]] += 1;
                    }
                }
            }
            // isolated in the graph: leave it (its own graph component)
            if let Some((q, _)) = votes.iter().enumerate().filter(|(_, &c)| c > 0).max_by_key(|(q, &c)| (c, Reverse(*q))) {
                for &v in members {
                    part[v] = q;
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Seeded multilevel recursive bisection into `n_parts` connected parts.
pub fn partition_graph(graph: &NodeGraph, n_parts: usize, seed: u64) -> Result<PartitionMap> {
    let n = graph.len();
    if n_parts == 0 || n_parts > n {
        return Err(Error::Partition(format!(
            "cannot split {n} nodes into {n_parts} parts"
        )));
    }
    let (ncomp, _) = graph.components();
    if ncomp > 1 {
        log::warn!("node graph has {ncomp} connected components");
    }
    let g = WGraph {
        ptr: graph.ptr.clone(),
        adj: graph.adj.clone(),
        ewt: vec![1; graph.adj.len()],
        vwt: vec![1; n],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut part = vec![0usize; n];
    let nodes: Vec<usize> = (0..n).collect();
    recursive_bisect(&g, &nodes, n_parts, 0, &mut part, &mut rng);
    if ncomp == 1 {
        enforce_connectivity(graph, &mut part, n_parts);
    }
    PartitionMap::new(part, n_parts)
}

/// Nodes with a graph neighbour in another part.
pub fn interface_nodes(graph: &NodeGraph, pmap: &PartitionMap) -> Vec<usize> {
    (0..graph.len())
        .filter(|&v| graph.neighbors(v).iter().any(|&w| pmap.part[w] != pmap.part[v]))
        .collect()
}

/// Lattice node nearest the closest point of active node `i`
/// (componentwise round-half-up), if it is active.
fn nearest_active_to_cp(grid: &BandGrid, i: usize) -> Option<usize> {
    let t = grid.lattice_coords(&grid.node(i).cp.cp);
    let mut ix = [0i64; 3];
    for a in 0..grid.d {
        ix[a] = (t[a] + 0.5).floor() as i64;
    }
    grid.index_of(&ix).filter(|&k| grid.is_active(k))
}

/// Interface nodes whose closest point's nearest node lies in another part.
pub fn misaligned_nodes(grid: &BandGrid, graph: &NodeGraph, pmap: &PartitionMap) -> Vec<(usize, usize)> {
    interface_nodes(graph, pmap)
        .into_iter()
        .filter_map(|i| {
            let k = nearest_active_to_cp(grid, i)?;
            (pmap.part[k] != pmap.part[i]).then_some((i, pmap.part[k]))
        })
        .collect()
}

/// `passes` rounds of simultaneous migration of misaligned interface nodes.
pub fn align_interfaces(
    grid: &BandGrid,
    graph: &NodeGraph,
    pmap: &PartitionMap,
    passes: usize,
) -> Result<PartitionMap> {
    let mut part = pmap.part.clone();
    for pass in 0..passes {
        let cur = PartitionMap {
            part: part.clone(),
            n_parts: pmap.n_parts,
        };
        let moves = misaligned_nodes(grid, graph, &cur);
        if moves.is_empty() {
            break;
        }
        for (i, q) in moves {
            part[i] = q;
        }
        let sizes = PartitionMap { part: part.clone(), n_parts: pmap.n_parts }.sizes();
        if let Some(j) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Partition(format!(
                "interface alignment pass {} emptied part {j}; too many subdomains for this resolution",
                pass + 1
            )));
        }
    }
    PartitionMap::new(part, pmap.n_parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::build_band_tube;
    use crate::geometry::Surface;

    fn circle() -> (BandGrid, NodeGraph) {
        let g = build_band_tube(&Surface::circle(1.0).unwrap(), 0.05, 3).unwrap();
        let graph = build_graph(&g);
        (g, graph)
    }

    #[test]
    fn single_node_graph_has_no_edges() {
        let g = NodeGraph::from_adjacency(vec![vec![]]);
        assert_eq!(g.n_edges(), 0);
    }

    #[test]
    fn circle_graph_connected_and_bounded_degree() {
        let (_, graph) = circle();
        assert_eq!(graph.components().0, 1);
        assert!((0..graph.len()).all(|v| graph.neighbors(v).len() <= 4));
    }

    #[test]
    fn one_part() {
        let (_, graph) = circle();
        let p = partition_graph(&graph, 1, 0).unwrap();
        assert!(p.part.iter().all(|&x| x == 0));
    }

    #[test]
    fn bisection_balanced_connected_deterministic() {
        let (_, graph) = circle();
        let p = partition_graph(&graph, 2, 7).unwrap();
        let n = graph.len() as f64;
        for s in p.sizes() {
            assert!((s as f64 - n / 2.0).abs() <= 0.1 * n / 2.0);
        }
        assert_eq!(p, partition_graph(&graph, 2, 7).unwrap());
        for j in 0..2 {
            let members = p.members(j);
            let sub: Vec<Vec<usize>> = {
                let mut local = vec![usize::MAX; graph.len()];
                for (k, &v) in members.iter().enumerate() {
                    local[v] = k;
                }
                members
                    .iter()
                    .map(|&v| graph.neighbors(v).iter().filter_map(|&w| (local[w] != usize::MAX).then(|| local[w])).collect())
                    .collect()
            };
            assert_eq!(NodeGraph::from_adjacency(sub).components().0, 1);
        }
    }

    #[test]
    fn too_many_parts_rejected() {
        let g = NodeGraph::from_adjacency(vec![vec![1], vec![0]]);
        assert!(partition_graph(&g, 3, 0).is_err());
    }

    #[test]
    fn partition_file_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.txt");
        let p = PartitionMap::new(vec![0, 1, 1, 0, 2], 3).unwrap();
        save_partition(&path, &p).unwrap();
        assert_eq!(load_partition(&path, 5).unwrap(), p);
        std::fs::write(&path, "0\n0\n0\n").unwrap();
        assert_eq!(load_partition(&path, 3).unwrap().n_parts, 1);
        std::fs::write(&path, "0\n2\n0\n").unwrap();
        assert!(matches!(load_partition(&path, 3), Err(Error::Partition(_))));
    }

    #[test]
    fn alignment_reduces_misalignment() {
        let (g, graph) = circle();
        // a diagonal chord meets the band obliquely to the normals
        let part: Vec<usize> = g.active().iter().map(|n| (n.x.0[1] > n.x.0[0] + 0.6) as usize).collect();
        let p = PartitionMap::new(part, 2).unwrap();
        let before = misaligned_nodes(&g, &graph, &p).len();
        let q = align_interfaces(&g, &graph, &p, g.p + 1).unwrap();
        let after = misaligned_nodes(&g, &graph, &q).len();
        assert!(before > 0 && after < before, "before {before} after {after}");
        assert_eq!(q.n_parts, 2);
        // a second alignment of an aligned map moves nothing when at a fixed point
        let r = align_interfaces(&g, &graph, &q, 50).unwrap();
        if misaligned_nodes(&g, &graph, &r).is_empty() {
            assert_eq!(align_interfaces(&g, &graph, &r, 3).unwrap(), r);
        }
    }

    #[test]
    fn single_part_has_no_interface() {
        let (g, graph) = circle();
        let p = PartitionMap::new(vec![0; graph.len()], 1).unwrap();
        assert!(interface_nodes(&graph, &p).is_empty());
        assert_eq!(align_interfaces(&g, &graph, &p, 3).unwrap(), p);
    }
}
