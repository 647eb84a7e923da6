//! Recovers a planted partition with the multilevel modularity clustering.
//!
//! `cargo run --release --example cluster_planted -- 8 100`

use std::collections::BTreeMap;

use groupdyn::grouping::{cluster, ClusterParams};
use groupdyn::synth::planted_partition;

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (blocks, size) = match args[..] {
        [b, s] => (b, s),
        _ => (8, 100),
    };
    let (graph, truth) = planted_partition(blocks, size, 0.1, 0.001, 1);
    println!("{} vertices, {} edges", graph.vertex_count(), graph.edge_count());

    let params = ClusterParams {
        target_avg_size: size as f64,
        ..ClusterParams::default()
    };
    let c = cluster(&graph, &params).unwrap();
    println!("{} clusters, mean size {:.1}", c.clusters.len(), c.mean_size());

    let block_of: BTreeMap<_, _> = graph.vertices().iter().zip(&truth).collect();
    for (i, cl) in c.clusters.iter().enumerate() {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for u in cl {
            *counts.entry(*block_of[u]).or_default() += 1;
        }
        let (block, hits) = counts.iter().max_by_key(|(_, n)| **n).unwrap();
        println!("cluster {i:>2}: {:>4} members, {hits} from planted block {block}", cl.len());
    }
}
