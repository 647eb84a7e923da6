//! Multi-level modularity clustering on a weighted undirected graph.
//!
//! The graph is coarsened by repeated heavy-edge matching, partitioned at the
//! coarsest level by local moving plus aggregation, and the partition is then
//! projected level by level with a local-moving refinement pass at each level.
//! A final pass re-clusters each community on its own and keeps improving splits.
//! All randomness is drawn from a seeded ChaCha stream.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MAX_SWEEPS: usize = 64;
const MAX_AGGREGATIONS: usize = 32;
const MAX_SPLIT_ROUNDS: usize = 4;

#[derive(Debug, Clone)]
pub(crate) struct WGraph {
    adj: Vec<Vec<(usize, f64)>>,
    /// Self-loop weight per vertex, counted once.
    loops: Vec<f64>,
    strength: Vec<f64>,
    /// Twice the total edge weight.
    total: f64,
}

impl WGraph {
    pub(crate) fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        let mut loops = vec![0.0; n];
        for &(u, v, w) in edges {
            if u == v {
                loops[u] += w;
            } else {
                adj[u].push((v, w));
                adj[v].push((u, w));
            }
        }
        WGraph::from_parts(adj, loops)
    }

    fn from_parts(mut adj: Vec<Vec<(usize, f64)>>, loops: Vec<f64>) -> Self {
        for list in &mut adj {
            list.sort_by_key(|&(v, _)| v);
        }
        let strength: Vec<f64> = adj
            .iter()
            .zip(&loops)
            .map(|(list, l)| list.iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * l)
            .collect();
        let total = strength.iter().sum();
        WGraph {
            adj,
            loops,
            strength,
            total,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.adj.len()
    }

    /// Collapses vertices by `map` (vertex -> coarse vertex, labels dense).
    fn contract(&self, map: &[usize], coarse_n: usize) -> WGraph {
        let mut loops = vec![0.0; coarse_n];
        let mut acc: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); coarse_n];
        for u in 0..self.len() {
            let cu = map[u];
            loops[cu] += self.loops[u];
            for &(v, w) in &self.adj[u] {
                if u >= v {
                    continue;
                }
                let cv = map[v];
                if cu == cv {
                    loops[cu] += w;
                } else {
                    *acc[cu].entry(cv).or_insert(0.0) += w;
                    *acc[cv].entry(cu).or_insert(0.0) += w;
                }
            }
        }
        let mut strength = vec![0.0; coarse_n];
        for (u, s) in self.strength.iter().enumerate() {
            strength[map[u]] += s;
        }
        WGraph {
            adj: acc.into_iter().map(|m| m.into_iter().collect()).collect(),
            loops,
            strength,
            total: self.total,
        }
    }

    /// Subgraph induced by `vertices`, keeping the parent's strengths and
    /// total so modularity gains stay measured against the whole graph.
    fn induced(&self, vertices: &[usize]) -> WGraph {
        let index: std::collections::HashMap<usize, usize> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let adj = vertices
            .iter()
            .map(|&u| {
                self.adj[u]
                    .iter()
                    .filter_map(|&(v, w)| index.get(&v).map(|&j| (j, w)))
                    .collect()
            })
            .collect();
        WGraph {
            adj,
            loops: vertices.iter().map(|&u| self.loops[u]).collect(),
            strength: vertices.iter().map(|&u| self.strength[u]).collect(),
            total: self.total,
        }
    }
}

/// Modularity of `comm` scaled by the total weight (ordering-equivalent).
fn quality(g: &WGraph, comm: &[usize], gamma: f64) -> f64 {
    if g.total <= 0.0 {
        return 0.0;
    }
    let k = comm.iter().max().map_or(0, |m| m + 1);
    let mut tot = vec![0.0; k];
    let mut inner = 0.0;
    for u in 0..g.len() {
        tot[comm[u]] += g.strength[u];
        inner += 2.0 * g.loops[u];
        for &(v, w) in &g.adj[u] {
            if comm[v] == comm[u] {
                inner += w;
            }
        }
    }
    inner - gamma * tot.iter().map(|t| t * t).sum::<f64>() / g.total
}

/// Relabels communities densely in order of first appearance; returns the count.
fn compact(comm: &mut [usize]) -> usize {
    let mut relabel = vec![usize::MAX; comm.len().max(1)];
    let mut next = 0;
    for c in comm.iter_mut() {
        if *c >= relabel.len() {
            relabel.resize(*c + 1, usize::MAX);
        }
        if relabel[*c] == usize::MAX {
            relabel[*c] = next;
            next += 1;
        }
        *c = relabel[*c];
    }
    next
}

/// Greedy vertex moves maximizing modularity at resolution `gamma`.
/// `comm` labels must be `< g.len()`. Returns whether any vertex moved.
fn local_moving(g: &WGraph, comm: &mut [usize], gamma: f64, rng: &mut ChaCha8Rng) -> bool {
    let n = g.len();
    if g.total <= 0.0 {
        return false;
    }
    let mut tot = vec![0.0; n];
    for u in 0..n {
        tot[comm[u]] += g.strength[u];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any_move = false;
    for _ in 0..MAX_SWEEPS {
        let mut moved = false;
        for &u in &order {
            let ku = g.strength[u];
            let cu = comm[u];
            touched.clear();
            for &(v, w) in &g.adj[u] {
                let c = comm[v];
                if link[c] == 0.0 {
                    touched.push(c);
                }
                link[c] += w;
            }
            tot[cu] -= ku;
            let scale = gamma * ku / g.total;
            let mut best = cu;
            let mut best_gain = link[cu] - scale * tot[cu];
            for &c in &touched {
                let gain = link[c] - scale * tot[c];
                if gain > best_gain + 1e-12 * (1.0 + best_gain.abs()) {
                    best = c;
                    best_gain = gain;
                }
            }
            tot[best] += ku;
            for &c in &touched {
                link[c] = 0.0;
            }
            link[cu] = 0.0;
            if best != cu {
                comm[u] = best;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        any_move = true;
    }
    any_move
}

/// Local moving with repeated aggregation until no vertex moves.
fn louvain(g: &WGraph, gamma: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut assign: Vec<usize> = (0..g.len()).collect();
    let mut current = g.clone();
    for _ in 0..MAX_AGGREGATIONS {
        let mut comm: Vec<usize> = (0..current.len()).collect();
        if !local_moving(&current, &mut comm, gamma, rng) {
            break;
        }
        let k = compact(&mut comm);
        for a in assign.iter_mut() {
            *a = comm[*a];
        }
        if k == current.len() {
            break;
        }
        current = current.contract(&comm, k);
    }
    compact(&mut assign);
    assign
}

/// Re-partitions each community on its own induced subgraph and keeps any
/// split that raises modularity. Greedy agglomeration can glue two blocks
/// through a single bridging vertex, and vertex moves alone cannot undo that.
fn split_pass(g: &WGraph, comm: &mut [usize], gamma: f64, rng: &mut ChaCha8Rng) -> bool {
    let k = compact(comm);
    let mut members = vec![Vec::new(); k];
    for (u, &c) in comm.iter().enumerate() {
        members[c].push(u);
    }
    let mut next = k;
    let mut split = false;
    for verts in members.iter().filter(|v| v.len() > 1) {
        let sub = g.induced(verts);
        let parts = louvain(&sub, gamma, rng);
        let pieces = parts.iter().max().map_or(0, |m| m + 1);
        if pieces < 2 {
            continue;
        }
        let whole = quality(&sub, &vec![0; verts.len()], gamma);
        let q = quality(&sub, &parts, gamma);
        if q <= whole + 1e-12 * (1.0 + whole.abs()) {
            continue;
        }
        for (&u, &p) in verts.iter().zip(&parts) {
            if p > 0 {
                comm[u] = next + p - 1;
            }
        }
        next += pieces - 1;
        split = true;
    }
    split
}

/// One round of heavy-edge matching: each unmatched vertex (in random order)
/// pairs with its unmatched neighbor of largest edge weight.
fn heavy_edge_matching(g: &WGraph, rng: &mut ChaCha8Rng) -> (Vec<usize>, usize) {
    let n = g.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut map = vec![usize::MAX; n];
    let mut next = 0;
    for &u in &order {
        if map[u] != usize::MAX {
            continue;
        }
        let mut mate = None;
        let mut heaviest = 0.0;
        for &(v, w) in &g.adj[u] {
            if map[v] == usize::MAX && w > heaviest {
                heaviest = w;
                mate = Some(v);
            }
        }
        map[u] = next;
        if let Some(v) = mate {
            map[v] = next;
        }
        next += 1;
    }
    (map, next)
}

/// Coarsening hierarchy: `levels[0]` is the input graph, `maps[i]` sends
/// vertices of level `i` to vertices of level `i + 1`.
#[derive(Debug, Clone)]
pub(crate) struct Hierarchy {
    levels: Vec<WGraph>,
    maps: Vec<Vec<usize>>,
    seed: u64,
}

impl Hierarchy {
    pub(crate) fn build(base: WGraph, coarse_limit: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut levels = vec![base];
        let mut maps = Vec::new();
        loop {
            let g = levels.last().expect("nonempty");
            if g.len() <= coarse_limit {
                break;
            }
            let (map, k) = heavy_edge_matching(g, &mut rng);
            if k as f64 > 0.95 * g.len() as f64 {
                break;
            }
            let coarse = g.contract(&map, k);
            maps.push(map);
            levels.push(coarse);
        }
        Hierarchy { levels, maps, seed }
    }

    pub(crate) fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Partition of the level-0 vertices at resolution `gamma`; labels dense.
    pub(crate) fn partition(&self, gamma: f64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        let coarsest = self.levels.last().expect("nonempty");
        let mut comm = louvain(coarsest, gamma, &mut rng);
        for level in (0..self.maps.len()).rev() {
            let map = &self.maps[level];
            let mut fine: Vec<usize> = map.iter().map(|&c| comm[c]).collect();
            local_moving(&self.levels[level], &mut fine, gamma, &mut rng);
            compact(&mut fine);
            comm = fine;
        }
        let base = &self.levels[0];
        for _ in 0..MAX_SPLIT_ROUNDS {
            if !split_pass(base, &mut comm, gamma, &mut rng) {
                break;
            }
            compact(&mut comm);
            local_moving(base, &mut comm, gamma, &mut rng);
        }
        compact(&mut comm);
        comm
    }
}
