//! Cohesion of a small follower graph under the three induction rules.

use std::collections::BTreeSet;

use groupdyn::cohesion::{induce, CohesionStats, FollowerIndex, Mode};
use groupdyn::corpus::FollowerEdge;
use groupdyn::UserId;

fn main() {
    let edges = [
        ("ann", "bob"),
        ("bob", "ann"),
        ("bob", "cat"),
        ("cat", "ann"),
        ("cat", "dan"),
        ("dan", "cat"),
        ("eve", "dan"),
    ]
    .map(|(a, b)| FollowerEdge::new(a, b));
    let index = FollowerIndex::new(&edges);
    let members: BTreeSet<UserId> = ["ann", "bob", "cat", "dan", "eve"].into_iter().map(UserId::new).collect();

    println!("{:<11} {:>8} {:>12} {:>10} {:>8}", "mode", "density", "transitivity", "avg_clust", "asp");
    let show = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.3}"));
    for mode in Mode::ALL {
        let sub = induce(&members, &index, mode);
        let s = CohesionStats::of(&sub);
        println!(
            "{:<11} {:>8} {:>12} {:>10} {:>8}",
            mode.name(),
            show(s.density),
            show(s.transitivity),
            show(s.avg_clustering),
            show(s.avg_shortest_path)
        );
    }
}
