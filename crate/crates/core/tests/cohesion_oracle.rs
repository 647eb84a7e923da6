mod common;

use common::*;
use groupdyn::cohesion::{avg_clustering, avg_shortest_path, density, transitivity, CohesionStats, InducedSubgraph, Mode};
use proptest::prelude::*;

fn check_against_oracle(n: usize, arcs: &[(usize, usize)]) {
    for mode in Mode::ALL {
        let sub = InducedSubgraph::from_arcs(n, arcs, mode);
        let a = adjacency(n, arcs, mode);
        let ctx = format!("n={n} mode={mode:?} arcs={arcs:?}");
        assert!(close(density(&sub), oracle_density(&a), 1e-9), "density {ctx}");
        assert!(close(transitivity(&sub), oracle_transitivity(&a, mode), 1e-9), "transitivity {ctx}");
        assert!(close(avg_clustering(&sub), oracle_avg_clustering(&a, mode), 1e-9), "clustering {ctx}");
        assert!(close(avg_shortest_path(&sub), oracle_avg_shortest_path(&a, mode), 1e-9), "asp {ctx}");
    }
}

#[test]
fn thousand_random_digraphs_match_matrix_oracles() {
    let mut rng = rng(2024);
    for _ in 0..1000 {
        let (n, arcs) = random_digraph(&mut rng, 30);
        check_against_oracle(n, &arcs);
        let d = |m| density(&InducedSubgraph::from_arcs(n, &arcs, m));
        if n >= 2 {
            let (r, dir, u) = (d(Mode::Reciprocal).unwrap(), d(Mode::Directed).unwrap(), d(Mode::Undirected).unwrap());
            assert!(r <= dir && dir <= u, "density ordering violated: {r} {dir} {u}");
        }
    }
}

#[test]
fn hand_checked_statistics() {
    // directed 3-cycle: every two-path i->j->k is open, reciprocal graph is empty
    let cycle = [(0, 1), (1, 2), (2, 0)];
    let dir = InducedSubgraph::from_arcs(3, &cycle, Mode::Directed);
    assert_eq!(density(&dir), Some(0.5));
    assert_eq!(transitivity(&dir), Some(0.0));
    let und = InducedSubgraph::from_arcs(3, &cycle, Mode::Undirected);
    assert_eq!(transitivity(&und), Some(1.0));
    assert_eq!(avg_clustering(&und), Some(1.0));
    assert_eq!(avg_shortest_path(&und), Some(1.0));
    let rec = InducedSubgraph::from_arcs(3, &cycle, Mode::Reciprocal);
    assert_eq!(density(&rec), Some(0.0));
    assert_eq!(transitivity(&rec), None);
    assert_eq!(avg_shortest_path(&rec), Some(0.0));

    // undirected path 0-1-2-3 plus a separate edge 4-5: the path dominates
    let path = [(0, 1), (1, 2), (2, 3), (4, 5)];
    let und = InducedSubgraph::from_arcs(6, &path, Mode::Undirected);
    assert!((avg_shortest_path(&und).unwrap() - 20.0 / 12.0).abs() < 1e-12);
}

fn arb_digraph(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1..=max_n).prop_flat_map(|n| {
        let arcs = proptest::collection::vec((0..n, 0..n), 0..=(n * n / 2).max(1));
        (Just(n), arcs)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn oracle_agreement_up_to_fifty_vertices((n, arcs) in arb_digraph(50)) {
        let arcs: Vec<_> = arcs.into_iter().filter(|(a, b)| a != b).collect();
        check_against_oracle(n, &arcs);
    }

    #[test]
    fn statistics_invariant_under_relabeling((n, arcs) in arb_digraph(25), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng(seed));
        let relabeled: Vec<_> = arcs.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        for mode in Mode::ALL {
            let x = CohesionStats::of(&InducedSubgraph::from_arcs(n, &arcs, mode));
            let y = CohesionStats::of(&InducedSubgraph::from_arcs(n, &relabeled, mode));
            prop_assert!(close(x.density, y.density, 1e-12));
            prop_assert!(close(x.transitivity, y.transitivity, 1e-12));
            prop_assert!(close(x.avg_clustering, y.avg_clustering, 1e-12));
            prop_assert!(close(x.avg_shortest_path, y.avg_shortest_path, 1e-12));
        }
    }
}
