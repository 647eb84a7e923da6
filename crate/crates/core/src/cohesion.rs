//! Structural cohesion of a group's node-induced follower subgraph.
//!
//! Three inductions are supported: the raw directed follow graph, the
//! reciprocal graph (an edge only when both users follow each other) and the
//! undirected graph (an edge when either follows the other). Statistics that
//! are undefined on a degenerate graph come back as `None`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::corpus::{FollowerEdge, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Directed,
    Reciprocal,
    Undirected,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Directed, Mode::Reciprocal, Mode::Undirected];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Directed => "directed",
            Mode::Reciprocal => "reciprocal",
            Mode::Undirected => "undirected",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Follow relation indexed by follower, for fast induction.
#[derive(Debug, Clone, Default)]
pub struct FollowerIndex {
    following: BTreeMap<UserId, BTreeSet<UserId>>,
}

impl FollowerIndex {
    pub fn new<'a>(edges: impl IntoIterator<Item = &'a FollowerEdge>) -> Self {
        let mut following: BTreeMap<UserId, BTreeSet<UserId>> = BTreeMap::new();
        for e in edges {
            if e.follower != e.followee {
                following
                    .entry(e.follower.clone())
                    .or_default()
                    .insert(e.followee.clone());
            }
        }
        FollowerIndex { following }
    }

    pub fn follows(&self, a: &UserId, b: &UserId) -> bool {
        self.following.get(a).is_some_and(|s| s.contains(b))
    }
}

/// A group's follower subgraph. Vertices are the members in sorted order;
/// `adj[i]` lists out-neighbors (directed) or neighbors (symmetric modes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InducedSubgraph {
    pub mode: Mode,
    pub vertices: Vec<UserId>,
    adj: Vec<BTreeSet<usize>>,
}

impl InducedSubgraph {
    /// Builds a subgraph directly from vertex-index arcs `(follower, followee)`.
    pub fn from_arcs(n: usize, arcs: &[(usize, usize)], mode: Mode) -> Self {
        let mut out = vec![BTreeSet::new(); n];
        for &(a, b) in arcs {
            if a != b {
                out[a].insert(b);
            }
        }
        let vertices = (0..n).map(|i| UserId::new(i.to_string())).collect();
        InducedSubgraph::from_out_sets(vertices, out, mode)
    }

    fn from_out_sets(vertices: Vec<UserId>, out: Vec<BTreeSet<usize>>, mode: Mode) -> Self {
        let n = vertices.len();
        let adj = match mode {
            Mode::Directed => out,
            Mode::Reciprocal => (0..n)
                .map(|a| out[a].iter().copied().filter(|&b| out[b].contains(&a)).collect())
                .collect(),
            Mode::Undirected => {
                let mut adj = out.clone();
                for (a, targets) in out.iter().enumerate() {
                    for &b in targets {
                        adj[b].insert(a);
                    }
                }
                adj
            }
        };
        InducedSubgraph { mode, vertices, adj }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Arcs for directed mode, unordered pairs otherwise.
    pub fn edge_count(&self) -> usize {
        let arcs: usize = self.adj.iter().map(BTreeSet::len).sum();
        match self.mode {
            Mode::Directed => arcs,
            _ => arcs / 2,
        }
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }
}

/// Node-induced follower subgraph of `members` under `mode`.
pub fn induce(members: &BTreeSet<UserId>, followers: &FollowerIndex, mode: Mode) -> InducedSubgraph {
    let vertices: Vec<UserId> = members.iter().cloned().collect();
    let index: BTreeMap<&UserId, usize> = vertices.iter().enumerate().map(|(i, u)| (u, i)).collect();
    let out = vertices
        .iter()
        .map(|u| {
            followers
                .following
                .get(u)
                .map(|targets| targets.iter().filter_map(|t| index.get(t).copied()).collect())
                .unwrap_or_default()
        })
        .collect();
    InducedSubgraph::from_out_sets(vertices, out, mode)
}

/// Edge density; `None` with fewer than two vertices.
pub fn density(sub: &InducedSubgraph) -> Option<f64> {
    let n = sub.vertex_count() as f64;
    if sub.vertex_count() < 2 {
        return None;
    }
    let pairs = match sub.mode {
        Mode::Directed => n * (n - 1.0),
        _ => n * (n - 1.0) / 2.0,
    };
    Some(sub.edge_count() as f64 / pairs)
}

/// Global clustering coefficient.
///
/// Symmetric modes: `3 * triangles / connected triples`. Directed mode: the
/// fraction of two-paths `i -> j -> k` (`i != k`) closed by an arc `i -> k`.
/// `None` when there is no triple (two-path) at all.
pub fn transitivity(sub: &InducedSubgraph) -> Option<f64> {
    let mut closed = 0u64;
    let mut paths = 0u64;
    match sub.mode {
        Mode::Directed => {
            for i in 0..sub.vertex_count() {
                for &j in sub.neighbors(i) {
                    for &k in sub.neighbors(j) {
                        if k != i {
                            paths += 1;
                            closed += sub.has_edge(i, k) as u64;
                        }
                    }
                }
            }
        }
        _ => {
            for v in 0..sub.vertex_count() {
                let (links, deg) = neighbor_links(sub, v);
                closed += links;
                paths += deg * deg.saturating_sub(1) / 2;
            }
        }
    }
    (paths > 0).then(|| closed as f64 / paths as f64)
}

/// Number of edges among the neighbors of `v`, and the degree of `v`.
fn neighbor_links(sub: &InducedSubgraph, v: usize) -> (u64, u64) {
    let nbrs = sub.neighbors(v);
    let mut links = 0;
    for &a in nbrs {
        links += sub.neighbors(a).range(a + 1..).filter(|b| nbrs.contains(b)).count() as u64;
    }
    (links, nbrs.len() as u64)
}

/// Mean local clustering coefficient (symmetric modes only); vertices of
/// degree below two contribute 0. `None` for an empty graph or directed mode.
pub fn avg_clustering(sub: &InducedSubgraph) -> Option<f64> {
    if sub.mode == Mode::Directed || sub.vertex_count() == 0 {
        return None;
    }
    let total: f64 = (0..sub.vertex_count())
        .map(|v| {
            let (links, deg) = neighbor_links(sub, v);
            if deg < 2 {
                0.0
            } else {
                2.0 * links as f64 / (deg * (deg - 1)) as f64
            }
        })
        .sum();
    Some(total / sub.vertex_count() as f64)
}

/// Maximum, over connected components with at least two vertices, of the mean
/// pairwise BFS distance; 0 when every component is a singleton. `None` in
/// directed mode.
pub fn avg_shortest_path(sub: &InducedSubgraph) -> Option<f64> {
    if sub.mode == Mode::Directed {
        return None;
    }
    let n = sub.vertex_count();
    let mut component = vec![usize::MAX; n];
    let mut dist = vec![usize::MAX; n];
    let mut best: f64 = 0.0;
    for root in 0..n {
        if component[root] != usize::MAX {
            continue;
        }
        let mut members = Vec::new();
        let mut queue = VecDeque::from([root]);
        component[root] = root;
        while let Some(v) = queue.pop_front() {
            members.push(v);
            for &w in sub.neighbors(v) {
                if component[w] == usize::MAX {
                    component[w] = root;
                    queue.push_back(w);
                }
            }
        }
        if members.len() < 2 {
            continue;
        }
        let mut sum = 0u64;
        for &src in &members {
            for &m in &members {
                dist[m] = usize::MAX;
            }
            dist[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(v) = queue.pop_front() {
                for &w in sub.neighbors(v) {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        sum += dist[w] as u64;
                        queue.push_back(w);
                    }
                }
            }
        }
        let k = members.len() as f64;
        best = best.max(sum as f64 / (k * (k - 1.0)));
    }
    Some(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CohesionStats {
    pub density: Option<f64>,
    pub transitivity: Option<f64>,
    pub avg_clustering: Option<f64>,
    pub avg_shortest_path: Option<f64>,
}

impl CohesionStats {
    pub fn of(sub: &InducedSubgraph) -> Self {
        CohesionStats {
            density: density(sub),
            transitivity: transitivity(sub),
            avg_clustering: avg_clustering(sub),
            avg_shortest_path: avg_shortest_path(sub),
        }
    }
}

/// Statistics of one group under all three inductions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupCohesion {
    pub directed: CohesionStats,
    pub reciprocal: CohesionStats,
    pub undirected: CohesionStats,
}

impl GroupCohesion {
    pub fn compute(members: &BTreeSet<UserId>, followers: &FollowerIndex) -> Self {
        let stats = |mode| CohesionStats::of(&induce(members, followers, mode));
        GroupCohesion {
            directed: stats(Mode::Directed),
            reciprocal: stats(Mode::Reciprocal),
            undirected: stats(Mode::Undirected),
        }
    }

    pub fn mode(&self, mode: Mode) -> &CohesionStats {
        match mode {
            Mode::Directed => &self.directed,
            Mode::Reciprocal => &self.reciprocal,
            Mode::Undirected => &self.undirected,
        }
    }
}
