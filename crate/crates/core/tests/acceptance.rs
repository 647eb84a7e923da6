//! One line per acceptance criterion; exits non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use groupdyn::cohesion::{avg_clustering, avg_shortest_path, density, transitivity, InducedSubgraph, Mode};
use groupdyn::grouping::{cluster, ClusterParams, InteractionGraph, SocialGroup};
use groupdyn::identity::{entropy, AidClass, ExpertiseClass, IdentityKind};
use groupdyn::inference::{binomial_one_sided, CohesionStat, CorrelationTable, Feature};
use groupdyn::pipeline::{Pipeline, Stage};
use groupdyn::sustainability::{growth_rate, membership_stability, series, Measure};
use groupdyn::synth::{planted_partition, SyntheticCorpus, SyntheticSpec};
use groupdyn::topics::{group_distribution, topic_divergence, TopicDistribution, TopicTable, DEFAULT_EPSILON};
use groupdyn::{PipelineConfig, UserId};
use rand::seq::SliceRandom;
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn binomial() -> Outcome {
    let start = Instant::now();
    let p9 = binomial_one_sided(20, 9);
    let p11 = binomial_one_sided(20, 11);
    let elapsed = start.elapsed();
    let ok = (p9 - 0.7483).abs() <= 5e-5 && (p11 - 0.4119).abs() <= 5e-5 && elapsed < Duration::from_millis(1);
    outcome(
        ok,
        format!("P(X>=9|20)={p9:.6} P(X>=11|20)={p11:.6} (tol 5e-5) in {elapsed:?} (limit 1ms)"),
    )
}

fn cohesion() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(7);
    let (mut mismatches, mut order_violations) = (0, 0);
    for _ in 0..1000 {
        let (n, arcs) = random_digraph(&mut rng, 30);
        for mode in Mode::ALL {
            let sub = InducedSubgraph::from_arcs(n, &arcs, mode);
            let a = adjacency(n, &arcs, mode);
            let agree = close(density(&sub), oracle_density(&a), 1e-9)
                && close(transitivity(&sub), oracle_transitivity(&a, mode), 1e-9)
                && close(avg_clustering(&sub), oracle_avg_clustering(&a, mode), 1e-9)
                && close(avg_shortest_path(&sub), oracle_avg_shortest_path(&a, mode), 1e-9);
            mismatches += !agree as usize;
        }
        if n >= 2 {
            let d = |m| density(&InducedSubgraph::from_arcs(n, &arcs, m)).unwrap();
            order_violations += !(d(Mode::Reciprocal) <= d(Mode::Directed) && d(Mode::Directed) <= d(Mode::Undirected)) as usize;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && order_violations == 0 && elapsed < Duration::from_secs(30),
        format!(
            "1000 digraphs x 3 modes: {mismatches} oracle mismatches (tol 1e-9), {order_violations} density-order violations, {elapsed:.2?} (limit 30s)"
        ),
    )
}

fn entropy_bounds() -> Outcome {
    let mut rng = rng(3);
    let (mut worst_expertise, mut worst_aid, mut negative) = (0.0f64, 0.0f64, false);
    for _ in 0..500 {
        let size = rng.gen_range(1..200);
        let e: Vec<ExpertiseClass> = (0..size).map(|_| *ExpertiseClass::ALL.choose(&mut rng).unwrap()).collect();
        let a: Vec<AidClass> = (0..size).map(|_| AidClass::from_index(rng.gen_range(0..8))).collect();
        let (he, ha) = (entropy(e).unwrap(), entropy(a).unwrap());
        negative |= he < 0.0 || ha < 0.0;
        worst_expertise = worst_expertise.max(he);
        worst_aid = worst_aid.max(ha);
    }
    let uniform_e = entropy(ExpertiseClass::ALL.iter().flat_map(|c| [*c; 4])).unwrap();
    let uniform_a = entropy(AidClass::all().flat_map(|c| [c; 4])).unwrap();
    let (le, la) = (10f64.ln(), 8f64.ln());
    let ok = !negative
        && worst_expertise <= le + 1e-12
        && worst_aid <= la + 1e-12
        && (uniform_e - le).abs() <= 1e-9
        && (uniform_a - la).abs() <= 1e-9;
    outcome(
        ok,
        format!(
            "max random H: expertise {worst_expertise:.6} <= ln10 {le:.6}, AID {worst_aid:.6} <= ln8 {la:.6}; uniform gap {:.1e} / {:.1e} (tol 1e-9)",
            (uniform_e - le).abs(),
            (uniform_a - la).abs()
        ),
    )
}

fn topic_measures() -> Outcome {
    let mut rng = rng(4);
    let mut exact = true;
    for _ in 0..200 {
        let k = rng.gen_range(2..8);
        let members: Vec<TopicDistribution> = (0..rng.gen_range(1..20))
            .map(|_| {
                let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
                let s: f64 = w.iter().sum();
                TopicDistribution::new(w.iter().map(|x| x / s).collect()).unwrap()
            })
            .collect();
        let refs: Vec<&TopicDistribution> = members.iter().collect();
        let g = group_distribution(&refs).unwrap();
        for i in 0..k {
            let mut sum = 0.0;
            for m in &members {
                sum += m.probs()[i];
            }
            exact &= g.probs()[i] == sum / members.len() as f64;
        }
    }
    let d = TopicDistribution::new(vec![0.5, 0.3, 0.2]).unwrap();
    let identical = topic_divergence(&[&d, &d, &d, &d], DEFAULT_EPSILON);
    let a = TopicDistribution::new(vec![0.6, 0.2, 0.2]).unwrap();
    let b = TopicDistribution::new(vec![0.2, 0.6, 0.2]).unwrap();
    let two = topic_divergence(&[&a, &b], DEFAULT_EPSILON).unwrap();
    let ok = exact && identical == Some(0.0) && (two - 0.1151).abs() <= 1e-3;
    outcome(
        ok,
        format!("average exact on 200 groups: {exact}; identical TD = {identical:?}; two-member TD = {two:.6} (0.1151 +- 1e-3)"),
    )
}

fn stability_growth() -> Outcome {
    let ids = |r: std::ops::Range<u32>| -> BTreeSet<UserId> { r.map(|i| UserId::new(format!("u{i}"))).collect() };
    let (prev, cur) = (ids(0..5), ids(4..14));
    let ms = membership_stability(&prev, &cur).unwrap();
    let gr = growth_rate(&prev, &cur).unwrap();
    let members = ids(0..12);
    let snaps: BTreeMap<usize, BTreeSet<UserId>> = (0..9).map(|t| (t, members.clone())).collect();
    let g = SocialGroup::from_snapshots(0, members, snaps);
    let mean_gr = series(&g, 9, &TopicTable::new(3), DEFAULT_EPSILON).mean_gr();
    outcome(
        ms == 10.0 / 14.0 && gr == 2.0 && mean_gr == Some(1.0),
        format!("MS = {ms} (10/14), GR = {gr} (2.0), constant mean_GR = {mean_gr:?} (1.0 exact)"),
    )
}

fn run_pipeline(dir: &Path, synth: &SyntheticCorpus) -> Pipeline {
    synth.write(dir).unwrap();
    let p = Pipeline::new(PipelineConfig::load(&dir.join("groupdyn.toml")).unwrap());
    p.run_all().unwrap();
    p
}

fn report_bytes(p: &Pipeline) -> BTreeMap<String, Vec<u8>> {
    let dir = p.stage_dir(Stage::Report);
    fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn end_to_end(synth: &SyntheticCorpus, dir: &Path) -> (Outcome, Pipeline) {
    let start = Instant::now();
    let p = run_pipeline(dir, synth);
    let elapsed = start.elapsed();
    let text = fs::read_to_string(p.artifact(Stage::Report, "correlations.csv")).unwrap();
    let table = CorrelationTable::parse_csv("synthetic", &text).unwrap();
    let td = |f| table.r(f, Measure::TopicDivergence);
    let mut ok = elapsed < Duration::from_secs(300);
    let mut parts = Vec::new();
    for kind in IdentityKind::ALL {
        let r = td(Feature::Identity(kind));
        ok &= r.is_some_and(|r| r >= 0.3);
        parts.push(format!("{} r={}", Feature::Identity(kind).key(), fmt_r(r)));
    }
    for mode in Mode::ALL {
        let f = Feature::Cohesion(mode, CohesionStat::Density);
        let r = td(f);
        ok &= r.is_some_and(|r| r <= -0.3);
        parts.push(format!("{} r={}", f.key(), fmt_r(r)));
    }
    let groups = fs::read_to_string(p.artifact(Stage::Cohesion, "cohesion.csv")).unwrap().lines().count() - 1;
    let detail = format!(
        "{groups} groups; {} (identity >= 0.3, density <= -0.3); {elapsed:.2?} (limit 300s)",
        parts.join(", ")
    );
    (outcome(ok, detail), p)
}

fn fmt_r(r: Option<f64>) -> String {
    r.map_or_else(|| "NA".into(), |r| format!("{r:+.3}"))
}

fn clustering() -> Outcome {
    let (graph, truth) = planted_partition(8, 100, 0.1, 0.001, 1);
    let c = cluster(&graph, &ClusterParams::default()).unwrap();
    let of: BTreeMap<&UserId, usize> =
        c.clusters.iter().enumerate().flat_map(|(i, cl)| cl.iter().map(move |u| (u, i))).collect();
    let found: Vec<usize> = graph.vertices().iter().map(|u| of[u]).collect();
    let ri = rand_index(&truth, &found);
    let mean = c.mean_size();

    let ids: Vec<UserId> = (0..30).map(|i| UserId::new(format!("c{i:02}"))).collect();
    let mut cliques = InteractionGraph::with_vertices(ids.iter().cloned());
    for block in [0..15, 15..30] {
        for i in block.clone() {
            for j in block.clone().filter(|&j| j > i) {
                cliques.add_interaction(&ids[i], &ids[j]);
            }
        }
    }
    let found: BTreeSet<BTreeSet<UserId>> = cluster(&cliques, &ClusterParams::default()).unwrap().clusters.into_iter().collect();
    let expected: BTreeSet<BTreeSet<UserId>> =
        [ids[..15].iter().cloned().collect(), ids[15..].iter().cloned().collect()].into_iter().collect();
    let exact = found == expected;
    outcome(
        ri >= 0.9 && exact && (50.0..=200.0).contains(&mean),
        format!("planted 8x100 Rand index {ri:.4} (>= 0.9), mean size {mean:.1} ([50, 200]); two cliques exact: {exact}"),
    )
}

fn determinism(first: &Pipeline, synth: &SyntheticCorpus) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let second = run_pipeline(dir.path(), synth);
    let (a, b) = (report_bytes(first), report_bytes(&second));
    outcome(
        !a.is_empty() && a == b,
        format!("{} report files, byte-identical across runs: {}", a.len(), a == b),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 binomial test", binomial()),
        ("2 cohesion oracles", cohesion()),
        ("3 entropy bounds", entropy_bounds()),
        ("4 group distribution and TD", topic_measures()),
        ("5 stability and growth", stability_growth()),
    ];
    let synth = groupdyn::synth::generate(&SyntheticSpec::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (e2e, first) = end_to_end(&synth, dir.path());
    results.push(("6 synthetic end-to-end", e2e));
    results.push(("7 clustering recovery", clustering()));
    results.push(("8 determinism", determinism(&first, &synth)));

    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.passed as usize;
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
