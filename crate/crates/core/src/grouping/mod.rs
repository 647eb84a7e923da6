//! Interaction graph, social-group clustering, filtering and per-slice
//! activity snapshots.

mod multilevel;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::debug;

use crate::corpus::{Corpus, UserId};
use crate::error::{Error, Result};
use crate::io_util::{read_to_string, write_atomic};
use multilevel::{Hierarchy, WGraph};

/// Undirected user graph with one edge per interacting pair, weighted by the
/// number of retweet, reply and mention events in either direction.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InteractionGraph {
    vertices: Vec<UserId>,
    index: BTreeMap<UserId, usize>,
    edges: BTreeMap<(usize, usize), u64>,
}

impl InteractionGraph {
    pub fn build(corpus: &Corpus) -> Self {
        let mut g = InteractionGraph::with_vertices(corpus.users().cloned());
        for r in corpus.records() {
            for target in r.targets() {
                g.add_interaction(&r.author, target);
            }
        }
        g
    }

    pub fn with_vertices(vertices: impl IntoIterator<Item = UserId>) -> Self {
        let set: BTreeSet<UserId> = vertices.into_iter().collect();
        let vertices: Vec<UserId> = set.into_iter().collect();
        let index = vertices.iter().cloned().enumerate().map(|(i, u)| (u, i)).collect();
        InteractionGraph {
            vertices,
            index,
            edges: BTreeMap::new(),
        }
    }

    fn vertex(&mut self, u: &UserId) -> usize {
        if let Some(&i) = self.index.get(u) {
            return i;
        }
        // Keep vertices sorted so ids never depend on insertion order.
        let pos = self.vertices.partition_point(|v| v < u);
        self.vertices.insert(pos, u.clone());
        let shifted: BTreeMap<(usize, usize), u64> = std::mem::take(&mut self.edges)
            .into_iter()
            .map(|((a, b), w)| ((a + (a >= pos) as usize, b + (b >= pos) as usize), w))
            .collect();
        self.edges = shifted;
        self.index = self
            .vertices
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, u)| (u, i))
            .collect();
        pos
    }

    /// Records one interaction event; self-interactions are ignored.
    pub fn add_interaction(&mut self, a: &UserId, b: &UserId) {
        if a == b {
            return;
        }
        let (ia, ib) = (self.vertex(a), self.vertex(b));
        let key = (ia.min(ib), ia.max(ib));
        *self.edges.entry(key).or_insert(0) += 1;
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[UserId] {
        &self.vertices
    }

    pub fn weight(&self, a: &UserId, b: &UserId) -> u64 {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&x), Some(&y)) => self.edges.get(&(x.min(y), x.max(y))).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// Edges as `(u, v, weight)` with `u < v` in vertex order.
    pub fn edges(&self) -> impl Iterator<Item = (&UserId, &UserId, u64)> {
        self.edges
            .iter()
            .map(|(&(a, b), &w)| (&self.vertices[a], &self.vertices[b], w))
    }

    fn non_isolated(&self) -> Vec<usize> {
        let mut seen = vec![false; self.vertices.len()];
        for &(a, b) in self.edges.keys() {
            seen[a] = true;
            seen[b] = true;
        }
        (0..self.vertices.len()).filter(|&i| seen[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterParams {
    pub target_avg_size: f64,
    pub seed: u64,
    /// Use interaction counts as edge weights; `false` treats every edge as 1.
    pub weighted: bool,
    pub max_tuning_iterations: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            target_avg_size: 100.0,
            seed: 1,
            weighted: true,
            max_tuning_iterations: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Disjoint member sets, ordered by their smallest member.
    pub clusters: Vec<BTreeSet<UserId>>,
    /// Modularity resolution that produced this clustering.
    pub resolution: f64,
}

impl Clustering {
    pub fn mean_size(&self) -> f64 {
        if self.clusters.is_empty() {
            return 0.0;
        }
        self.clusters.iter().map(BTreeSet::len).sum::<usize>() as f64 / self.clusters.len() as f64
    }
}

/// Clusters the non-isolated vertices of `graph`.
///
/// The modularity resolution starts at 1 and is bisected (in log space) until
/// the mean cluster size lies in `[0.5 * target, 2 * target]`. When no
/// resolution reaches that band within the iteration cap, the candidate whose
/// mean size is closest to the band is returned; when the graph has fewer
/// clustered vertices than the band's lower end, resolution 1 is used as is.
pub fn cluster(graph: &InteractionGraph, params: &ClusterParams) -> Result<Clustering> {
    if graph.vertex_count() == 0 {
        return Err(Error::invalid("graph", "no vertices to cluster"));
    }
    if !(params.target_avg_size > 0.0) {
        return Err(Error::invalid("target group size", params.target_avg_size.to_string()));
    }
    if graph.edge_count() == 0 {
        return Ok(Clustering {
            clusters: graph
                .vertices()
                .iter()
                .map(|u| BTreeSet::from([u.clone()]))
                .collect(),
            resolution: 1.0,
        });
    }

    let members = graph.non_isolated();
    let local: BTreeMap<usize, usize> = members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let edges: Vec<(usize, usize, f64)> = graph
        .edges
        .iter()
        .map(|(&(a, b), &w)| (local[&a], local[&b], if params.weighted { w as f64 } else { 1.0 }))
        .collect();
    let base = WGraph::from_edges(members.len(), &edges);
    let n = members.len() as f64;
    let expected_clusters = (n / params.target_avg_size).ceil() as usize;
    let coarse_limit = (20 * expected_clusters).max(64);
    let hierarchy = Hierarchy::build(base, coarse_limit, params.seed);
    debug!("clustering {} vertices over {} levels", members.len(), hierarchy.depth());

    let lower = 0.5 * params.target_avg_size;
    let upper = 2.0 * params.target_avg_size;
    let evaluate = |log_gamma: f64| {
        let gamma = log_gamma.exp();
        let labels = hierarchy.partition(gamma);
        let k = labels.iter().max().map_or(0, |m| m + 1);
        (gamma, labels, n / k as f64)
    };
    // distance of a mean size from the acceptance band, in log units
    let miss = |mean: f64| {
        if mean < lower {
            (lower / mean).ln()
        } else if mean > upper {
            (mean / upper).ln()
        } else {
            0.0
        }
    };

    let mut best = evaluate(0.0);
    if n >= lower && miss(best.2) > 0.0 {
        let (mut lo, mut hi) = if best.2 > upper { (0.0, 12.0) } else { (-12.0, 0.0) };
        for _ in 0..params.max_tuning_iterations {
            let mid = 0.5 * (lo + hi);
            let candidate = evaluate(mid);
            let mean = candidate.2;
            if miss(mean) < miss(best.2) {
                best = candidate;
            }
            if miss(mean) == 0.0 {
                break;
            }
            // larger resolution gives smaller clusters
            if mean > upper {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let (resolution, labels, mean) = best;
    debug!("resolution {resolution:.4} gives mean cluster size {mean:.2}");

    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut clusters = vec![BTreeSet::new(); k];
    for (i, &c) in labels.iter().enumerate() {
        clusters[c].insert(graph.vertices[members[i]].clone());
    }
    clusters.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
    Ok(Clustering {
        clusters,
        resolution,
    })
}

/// A social group: a static member set plus the members active in each slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGroup {
    pub group_id: usize,
    pub members: BTreeSet<UserId>,
    /// Nonempty snapshots only; absent slices have `g_t = ∅`.
    snapshots: BTreeMap<usize, BTreeSet<UserId>>,
}

impl SocialGroup {
    /// Builds a group and computes every snapshot from posting activity.
    pub fn new(group_id: usize, members: BTreeSet<UserId>, corpus: &Corpus) -> Self {
        let mut snapshots: BTreeMap<usize, BTreeSet<UserId>> = BTreeMap::new();
        for u in &members {
            if let Some(slices) = corpus.active_slices(u) {
                for &t in slices {
                    snapshots.entry(t).or_default().insert(u.clone());
                }
            }
        }
        SocialGroup {
            group_id,
            members,
            snapshots,
        }
    }

    /// Builds a group from explicit snapshots; users outside `members` are dropped.
    pub fn from_snapshots(
        group_id: usize,
        members: BTreeSet<UserId>,
        snapshots: BTreeMap<usize, BTreeSet<UserId>>,
    ) -> Self {
        let snapshots = snapshots
            .into_iter()
            .map(|(t, s)| (t, s.intersection(&members).cloned().collect::<BTreeSet<_>>()))
            .filter(|(_, s)| !s.is_empty())
            .collect();
        SocialGroup {
            group_id,
            members,
            snapshots,
        }
    }

    /// `g_t`: members who posted in slice `t`.
    pub fn snapshot(&self, t: usize) -> BTreeSet<UserId> {
        self.snapshots.get(&t).cloned().unwrap_or_default()
    }

    pub fn snapshot_ref(&self, t: usize) -> Option<&BTreeSet<UserId>> {
        self.snapshots.get(&t)
    }

    pub fn snapshots(&self) -> &BTreeMap<usize, BTreeSet<UserId>> {
        &self.snapshots
    }

    pub fn active_slice_count(&self) -> usize {
        self.snapshots.len()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// `g_t` computed directly from the corpus.
pub fn snapshot(group: &BTreeSet<UserId>, corpus: &Corpus, t: usize) -> BTreeSet<UserId> {
    group
        .iter()
        .filter(|u| corpus.active_slices(u).is_some_and(|s| s.contains(&t)))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterParams {
    pub min_size: usize,
    pub min_active_slices: usize,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            min_size: 10,
            min_active_slices: 5,
        }
    }
}

/// Keeps groups with at least `min_size` members that were active in at least
/// `min_active_slices` slices (both bounds inclusive).
pub fn filter_groups(groups: Vec<SocialGroup>, params: FilterParams) -> Vec<SocialGroup> {
    groups
        .into_iter()
        .filter(|g| g.len() >= params.min_size && g.active_slice_count() >= params.min_active_slices)
        .collect()
}

/// Clusters the corpus interaction graph and returns every cluster as a
/// group (ids follow cluster order) before filtering.
pub fn identify_groups(corpus: &Corpus, params: &ClusterParams) -> Result<Vec<SocialGroup>> {
    let graph = InteractionGraph::build(corpus);
    let clustering = cluster(&graph, params)?;
    Ok(clustering
        .clusters
        .into_iter()
        .enumerate()
        .map(|(id, members)| SocialGroup::new(id, members, corpus))
        .collect())
}

/// CSV `user,group_id`, one row per member, groups in order.
pub fn assignment_csv(groups: &[SocialGroup]) -> String {
    let mut out = String::from("user,group_id\n");
    for g in groups {
        for u in &g.members {
            out.push_str(&format!("{},{}\n", u, g.group_id));
        }
    }
    out
}

/// CSV `group_id,slice,user`, one row per active member per slice.
pub fn snapshot_csv(groups: &[SocialGroup]) -> String {
    let mut out = String::from("group_id,slice,user\n");
    for g in groups {
        for (t, users) in &g.snapshots {
            for u in users {
                out.push_str(&format!("{},{},{}\n", g.group_id, t, u));
            }
        }
    }
    out
}

pub fn write_assignments(path: &Path, groups: &[SocialGroup]) -> Result<()> {
    write_atomic(path, assignment_csv(groups).as_bytes())
}

pub fn write_snapshots(path: &Path, groups: &[SocialGroup]) -> Result<()> {
    write_atomic(path, snapshot_csv(groups).as_bytes())
}

fn rows<'a>(path: &Path, text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate();
    let found = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if found != header {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            expected: header.into(),
            found: found.into(),
        });
    }
    Ok(lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(str::trim).collect())))
}

fn bad_row(path: &Path, line: usize) -> Error {
    Error::invalid("csv row", format!("{}:{}", path.display(), line))
}

/// Reads a `user,group_id` assignment file and a `group_id,slice,user`
/// snapshot file back into groups.
pub fn read_groups(assignments: &Path, snapshots: &Path) -> Result<Vec<SocialGroup>> {
    let text = read_to_string(assignments)?;
    let mut members: BTreeMap<usize, BTreeSet<UserId>> = BTreeMap::new();
    for (line, cells) in rows(assignments, &text, "user,group_id")? {
        let [user, gid] = cells[..] else {
            return Err(bad_row(assignments, line));
        };
        let gid: usize = gid.parse().map_err(|_| bad_row(assignments, line))?;
        members.entry(gid).or_default().insert(UserId::new(user));
    }
    let text = read_to_string(snapshots)?;
    let mut snaps: BTreeMap<usize, BTreeMap<usize, BTreeSet<UserId>>> = BTreeMap::new();
    for (line, cells) in rows(snapshots, &text, "group_id,slice,user")? {
        let [gid, t, user] = cells[..] else {
            return Err(bad_row(snapshots, line));
        };
        let gid: usize = gid.parse().map_err(|_| bad_row(snapshots, line))?;
        let t: usize = t.parse().map_err(|_| bad_row(snapshots, line))?;
        snaps.entry(gid).or_default().entry(t).or_default().insert(UserId::new(user));
    }
    Ok(members
        .into_iter()
        .map(|(gid, m)| SocialGroup::from_snapshots(gid, m, snaps.remove(&gid).unwrap_or_default()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{InteractionRecord, DEFAULT_SLICE_WIDTH};

    fn post(id: usize, author: &str, slice: i64) -> InteractionRecord {
        InteractionRecord {
            post_id: id.to_string(),
            author: author.into(),
            timestamp: slice * DEFAULT_SLICE_WIDTH + 5,
            tokens: vec![],
            retweet_of: None,
            reply_to: None,
            mentions: vec![],
        }
    }

    fn ids(xs: &[&str]) -> BTreeSet<UserId> {
        xs.iter().map(|x| UserId::from(*x)).collect()
    }

    #[test]
    fn graph_counts_each_interaction_event() {
        let mut a_to_b = post(0, "A", 0);
        a_to_b.retweet_of = Some("B".into());
        let c = Corpus::from_parts(vec![a_to_b], vec![], vec![], DEFAULT_SLICE_WIDTH).unwrap();
        let g = InteractionGraph::build(&c);
        assert_eq!(g.weight(&"A".into(), &"B".into()), 1);

        let mut m = post(0, "A", 0);
        m.mentions = vec!["B".into()];
        let mut r = post(1, "B", 0);
        r.reply_to = Some("A".into());
        let mut selfie = post(2, "C", 0);
        selfie.mentions = vec!["C".into()];
        let c = Corpus::from_parts(vec![m, r, selfie], vec![], vec![], DEFAULT_SLICE_WIDTH).unwrap();
        let g = InteractionGraph::build(&c);
        assert_eq!(g.weight(&"A".into(), &"B".into()), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.weight(&"C".into(), &"C".into()), 0);
    }

    #[test]
    fn late_vertices_keep_sorted_ids() {
        let mut g = InteractionGraph::with_vertices([UserId::from("m")]);
        g.add_interaction(&"x".into(), &"m".into());
        g.add_interaction(&"a".into(), &"x".into());
        assert_eq!(g.vertices(), &[UserId::from("a"), "m".into(), "x".into()]);
        assert_eq!(g.weight(&"m".into(), &"x".into()), 1);
        assert_eq!(g.weight(&"x".into(), &"a".into()), 1);
    }

    #[test]
    fn edgeless_graph_yields_singletons() {
        let g = InteractionGraph::with_vertices(["a", "b"].map(UserId::from));
        let c = cluster(&g, &ClusterParams::default()).unwrap();
        assert_eq!(c.clusters.len(), 2);
        assert!(cluster(&InteractionGraph::default(), &ClusterParams::default()).is_err());
    }

    #[test]
    fn isolated_vertices_are_not_clustered() {
        let mut g = InteractionGraph::with_vertices(["lonely"].map(UserId::from));
        g.add_interaction(&"a".into(), &"b".into());
        let c = cluster(&g, &ClusterParams::default()).unwrap();
        assert_eq!(c.clusters, vec![ids(&["a", "b"])]);
    }

    #[test]
    fn snapshots_follow_posting_activity() {
        let records = vec![post(0, "a", 0), post(1, "a", 0), post(2, "b", 1), post(3, "c", 2)];
        let c = Corpus::from_parts(records, vec![], vec![], DEFAULT_SLICE_WIDTH).unwrap();
        let members = ids(&["a", "b", "c"]);
        let g = SocialGroup::new(0, members.clone(), &c);
        assert_eq!(g.snapshot(0), ids(&["a"]));
        assert_eq!(snapshot(&members, &c, 0), ids(&["a"]));
        assert_eq!(g.snapshot(1), ids(&["b"]));
        assert!(g.snapshot(7).is_empty());
        assert_eq!(g.active_slice_count(), 3);
        let quiet = SocialGroup::new(1, ids(&["z"]), &c);
        assert!(quiet.snapshot(0).is_empty());
        assert_eq!(quiet.active_slice_count(), 0);
    }

    fn group_with(id: usize, size: usize, active: usize) -> SocialGroup {
        let members: BTreeSet<UserId> = (0..size).map(|i| UserId::new(format!("u{id}_{i}"))).collect();
        let first = members.iter().next().cloned().unwrap();
        let snaps = (0..active).map(|t| (t, BTreeSet::from([first.clone()]))).collect();
        SocialGroup::from_snapshots(id, members, snaps)
    }

    #[test]
    fn filter_bounds_are_inclusive() {
        let groups = vec![group_with(0, 9, 8), group_with(1, 40, 4), group_with(2, 10, 5)];
        let kept = filter_groups(groups, FilterParams::default());
        assert_eq!(kept.iter().map(|g| g.group_id).collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn from_snapshots_clips_to_members() {
        let g = SocialGroup::from_snapshots(
            0,
            ids(&["a", "b"]),
            BTreeMap::from([(0, ids(&["a", "z"])), (1, ids(&["z"]))]),
        );
        assert_eq!(g.snapshot(0), ids(&["a"]));
        assert_eq!(g.active_slice_count(), 1);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let groups = vec![group_with(3, 4, 2), group_with(7, 2, 1)];
        let a = dir.path().join("groups.csv");
        let s = dir.path().join("snapshots.csv");
        write_assignments(&a, &groups).unwrap();
        write_snapshots(&s, &groups).unwrap();
        assert_eq!(read_groups(&a, &s).unwrap(), groups);
    }
}
