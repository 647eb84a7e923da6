use std::collections::{BTreeMap, BTreeSet};

use groupdyn::cohesion::Mode;
use groupdyn::grouping::SocialGroup;
use groupdyn::identity::{aid_identity, entropy, AidThresholds, IdentityKind};
use groupdyn::inference::{
    binomial_one_sided, hypothesis_report, pearson, reciprocal_vs_undirected_test, undirected_vs_reciprocal_test,
    CohesionStat, CorrelationTable, Feature,
};
use groupdyn::sustainability::{growth_rate, membership_stability, series, Measure};
use groupdyn::topics::{TopicTable, DEFAULT_EPSILON};
use groupdyn::{UserId, UserProfile};
use proptest::prelude::*;

fn finite_pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..40).prop_flat_map(|n| {
        (
            proptest::collection::vec(-1e3f64..1e3, n),
            proptest::collection::vec(-1e3f64..1e3, n),
        )
    })
}

proptest! {
    #[test]
    fn pearson_affine_invariance(
        (xs, ys) in finite_pairs(),
        a in 0.1f64..10.0,
        b in -100.0f64..100.0,
        c in 0.1f64..10.0,
        d in -100.0f64..100.0,
    ) {
        if let Some(r) = pearson(&xs, &ys) {
            prop_assert!((-1.0..=1.0).contains(&r));
            let xt: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let yt: Vec<f64> = ys.iter().map(|y| c * y + d).collect();
            let rt = pearson(&xt, &yt).unwrap();
            prop_assert!((r - rt).abs() <= 1e-12, "{r} vs {rt}");
            let flipped: Vec<f64> = xs.iter().map(|x| -a * x + b).collect();
            let rf = pearson(&flipped, &ys).unwrap();
            prop_assert!((r + rf).abs() <= 1e-12, "{r} vs {rf}");
            prop_assert!((pearson(&ys, &xs).unwrap() - r).abs() <= 1e-12);
        }
    }

    #[test]
    fn binomial_bounds_and_monotonicity(n in 1u64..400) {
        prop_assert_eq!(binomial_one_sided(n, 0), 1.0);
        prop_assert_eq!(binomial_one_sided(n, n), 0.5f64.powi(n as i32));
        let mut prev = 1.0;
        for k in 1..=n {
            let p = binomial_one_sided(n, k);
            prop_assert!(p <= prev && p > 0.0, "n={} k={} p={} prev={}", n, k, p, prev);
            prev = p;
        }
    }

    #[test]
    fn entropy_is_bounded_and_label_invariant(
        labels in proptest::collection::vec(0usize..10, 1..80),
        shift in 1usize..10,
    ) {
        let h = entropy(labels.iter().copied()).unwrap();
        prop_assert!(h >= 0.0 && h <= 10f64.ln() + 1e-12);
        let mut rev = labels.clone();
        rev.reverse();
        prop_assert!((entropy(rev).unwrap() - h).abs() <= 1e-12);
        let renamed = labels.iter().map(|l| (l + shift) % 10);
        prop_assert!((entropy(renamed).unwrap() - h).abs() <= 1e-12);
        let distinct = labels.iter().collect::<BTreeSet<_>>().len();
        prop_assert_eq!(h == 0.0, distinct == 1);
    }

    #[test]
    fn aid_classes_are_monotone_per_metric(
        counts in proptest::collection::vec((0u64..50, 0u64..50, 0u64..50), 2..30),
    ) {
        let profiles: Vec<UserProfile> = counts
            .iter()
            .enumerate()
            .map(|(i, &(p, m, r))| UserProfile {
                post_count: p,
                mention_count: m,
                retweeted_count: r,
                ..UserProfile::empty(UserId::new(format!("u{i}")))
            })
            .collect();
        let th = AidThresholds::from_profiles(&profiles);
        let h = entropy(profiles.iter().map(|p| aid_identity(p, &th))).unwrap();
        prop_assert!(h <= 8f64.ln() + 1e-12);
        for a in &profiles {
            let ca = aid_identity(a, &th);
            for b in &profiles {
                let cb = aid_identity(b, &th);
                if a.post_count >= b.post_count {
                    prop_assert!(ca.activity_high || !cb.activity_high);
                }
                if a.mention_count >= b.mention_count {
                    prop_assert!(ca.popularity_high || !cb.popularity_high);
                }
                if a.retweeted_count >= b.retweeted_count {
                    prop_assert!(ca.diffusion_high || !cb.diffusion_high);
                }
            }
        }
    }

    #[test]
    fn stability_and_growth_ignore_names(
        prev in proptest::collection::btree_set(0u32..40, 1..30),
        cur in proptest::collection::btree_set(0u32..40, 1..30),
        offset in 1u32..1000,
    ) {
        let name = |s: &BTreeSet<u32>, o: u32| -> BTreeSet<UserId> {
            s.iter().map(|x| UserId::new(format!("x{}", x + o))).collect()
        };
        let (p, c) = (name(&prev, 0), name(&cur, 0));
        let (p2, c2) = (name(&prev, offset), name(&cur, offset));
        prop_assert_eq!(membership_stability(&p, &c), membership_stability(&p2, &c2));
        prop_assert_eq!(growth_rate(&p, &c), growth_rate(&p2, &c2));
        let ms = membership_stability(&p, &c).unwrap();
        prop_assert!(ms > 0.0 && ms <= c.len() as f64);
    }

    #[test]
    fn growth_rate_telescopes(
        a in proptest::collection::btree_set(0u32..60, 1..40),
        b in proptest::collection::btree_set(0u32..60, 1..40),
        c in proptest::collection::btree_set(0u32..60, 1..40),
    ) {
        let ids = |s: &BTreeSet<u32>| -> BTreeSet<UserId> { s.iter().map(|x| UserId::new(x.to_string())).collect() };
        let (a, b, c) = (ids(&a), ids(&b), ids(&c));
        let lhs = growth_rate(&a, &b).unwrap() * growth_rate(&b, &c).unwrap();
        prop_assert!((lhs - growth_rate(&a, &c).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn constant_snapshots_have_unit_growth(size in 1usize..30, slices in 2usize..12) {
        let members: BTreeSet<UserId> = (0..size).map(|i| UserId::new(format!("m{i}"))).collect();
        let snaps: BTreeMap<usize, BTreeSet<UserId>> = (0..slices).map(|t| (t, members.clone())).collect();
        let g = SocialGroup::from_snapshots(0, members, snaps);
        let s = series(&g, slices, &TopicTable::new(3), DEFAULT_EPSILON);
        prop_assert_eq!(s.mean_gr(), Some(1.0));
        prop_assert_eq!(s.mean_ms(), Some(size as f64));
        prop_assert_eq!(s.mean_td(), None);
    }
}

#[test]
fn uniform_labels_reach_the_entropy_bound() {
    let expertise: Vec<usize> = (0..10).flat_map(|c| [c; 7]).collect();
    assert!((entropy(expertise).unwrap() - 10f64.ln()).abs() <= 1e-9);
    let aid: Vec<usize> = (0..8).flat_map(|c| [c; 5]).collect();
    assert!((entropy(aid).unwrap() - 8f64.ln()).abs() <= 1e-9);
    assert_eq!(entropy([3usize; 12]), Some(0.0));
}

#[test]
fn binomial_reference_values() {
    assert!((binomial_one_sided(20, 9) - 0.7483).abs() <= 5e-5);
    assert!((binomial_one_sided(20, 11) - 0.4119).abs() <= 5e-5);
    assert!((binomial_one_sided(20, 20) - 9.5367e-7).abs() <= 1e-10);
    assert_eq!(binomial_one_sided(4, 2), 0.6875);
    assert_eq!(binomial_one_sided(4, 5), 0.0);
}

#[test]
fn five_leave_nine_join() {
    let ids = |r: std::ops::Range<u32>| -> BTreeSet<UserId> { r.map(|i| UserId::new(format!("u{i}"))).collect() };
    let prev = ids(0..5);
    let cur: BTreeSet<UserId> = ids(4..14);
    assert_eq!(cur.len(), 10);
    assert_eq!(membership_stability(&prev, &cur), Some(10.0 / 14.0));
    assert_eq!(growth_rate(&prev, &cur), Some(2.0));
}

/// Topic-divergence correlations for five published event datasets.
fn published_tables() -> Vec<CorrelationTable> {
    use CohesionStat::*;
    let cols: [(Feature, [f64; 5]); 13] = [
        (Feature::Cohesion(Mode::Directed, Density), [-0.33, -0.33, -0.14, -0.11, -0.33]),
        (Feature::Cohesion(Mode::Directed, Transitivity), [0.10, 0.05, 0.06, 0.16, 0.07]),
        (Feature::Cohesion(Mode::Reciprocal, Density), [-0.26, -0.30, -0.11, -0.07, -0.27]),
        (Feature::Cohesion(Mode::Reciprocal, Transitivity), [0.15, 0.06, 0.24, 0.19, 0.13]),
        (Feature::Cohesion(Mode::Reciprocal, AvgClustering), [0.17, -0.11, 0.32, 0.16, -0.01]),
        (Feature::Cohesion(Mode::Reciprocal, AvgShortestPath), [0.57, 0.20, 0.24, 0.43, 0.46]),
        (Feature::Cohesion(Mode::Undirected, Density), [-0.35, -0.34, -0.14, -0.13, -0.36]),
        (Feature::Cohesion(Mode::Undirected, Transitivity), [0.11, 0.04, 0.02, 0.23, 0.11]),
        (Feature::Cohesion(Mode::Undirected, AvgClustering), [0.22, -0.09, 0.05, 0.20, 0.00]),
        (Feature::Cohesion(Mode::Undirected, AvgShortestPath), [0.56, 0.28, 0.28, 0.37, 0.51]),
        (Feature::Identity(IdentityKind::Regional), [0.43, 0.40, 0.28, 0.25, 0.58]),
        (Feature::Identity(IdentityKind::Expertise), [0.44, 0.64, 0.29, 0.18, 0.39]),
        (Feature::Identity(IdentityKind::Aid), [0.47, 0.28, 0.24, 0.58, 0.36]),
    ];
    ["irene", "sandy", "india", "ows", "sopa"]
        .iter()
        .enumerate()
        .map(|(d, name)| {
            CorrelationTable::from_values(name, cols.iter().map(|(f, v)| (*f, Measure::TopicDivergence, v[d])))
        })
        .collect()
}

#[test]
fn published_correlations_give_published_binomial_tests() {
    let tables = published_tables();
    let rec = reciprocal_vs_undirected_test(&tables);
    assert_eq!((rec.n, rec.k), (20, 9));
    assert!((rec.p_value - 0.7483).abs() <= 5e-5);
    let und = undirected_vs_reciprocal_test(&tables);
    assert_eq!((und.n, und.k), (20, 11));
    assert!((und.p_value - 0.4119).abs() <= 5e-5);

    let report = hypothesis_report(&tables);
    let first = &report.datasets[0];
    for check in &first.checks {
        let density = matches!(check.feature, Feature::Cohesion(_, CohesionStat::Density));
        if density || matches!(check.feature, Feature::Identity(_)) {
            assert!(check.passed, "{:?}", check);
        }
    }
    let regional = first.checks.iter().find(|c| c.feature == Feature::Identity(IdentityKind::Regional)).unwrap();
    assert_eq!(regional.r, Some(0.43));
}
