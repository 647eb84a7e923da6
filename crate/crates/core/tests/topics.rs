use groupdyn::corpus::{Corpus, InteractionRecord, UserId};
use groupdyn::grouping::SocialGroup;
use groupdyn::sustainability::series;
use groupdyn::synth::{generate, SyntheticSpec};
use groupdyn::topics::{fit_topics, group_distribution, topic_divergence, TopicDistribution, TopicParams, DEFAULT_EPSILON};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VOCAB_A: [&str; 6] = ["flood", "rain", "levee", "surge", "storm", "wind"];
const VOCAB_B: [&str; 6] = ["vote", "senate", "bill", "lobby", "hearing", "petition"];

/// Users 0..20 write from vocabulary A, users 20..40 from B, in every slice.
fn two_topic_corpus(slices: i64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut records = Vec::new();
    for t in 0..slices {
        for u in 0..40 {
            let vocab = if u < 20 { &VOCAB_A } else { &VOCAB_B };
            let tokens = (0..30).map(|_| vocab.choose(&mut rng).unwrap().to_string()).collect();
            records.push(InteractionRecord {
                post_id: format!("{t}-{u}"),
                author: UserId::new(format!("u{u:02}")),
                timestamp: t * 86_400 + u,
                tokens,
                retweet_of: None,
                reply_to: None,
                mentions: Vec::new(),
            });
        }
    }
    Corpus::from_parts(records, Vec::new(), Vec::new(), 86_400).unwrap()
}

fn quick(k: usize) -> TopicParams {
    TopicParams {
        k,
        iterations: 200,
        burn_in: 50,
        sample_window: 50,
        ..TopicParams::default()
    }
}

#[test]
fn single_topic_is_degenerate() {
    let state = fit_topics(&two_topic_corpus(2), &quick(1)).unwrap();
    assert_eq!(state.table.len(), 80);
    for (_, _, d) in state.table.iter() {
        assert_eq!(d.probs(), &[1.0]);
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[test]
fn consecutive_slices_keep_their_topics() {
    let state = fit_topics(&two_topic_corpus(2), &quick(2)).unwrap();
    let (s0, s1) = (&state.topic_word[&0], &state.topic_word[&1]);
    for topic in s1 {
        let best = s0.iter().map(|prev| cosine(prev, topic)).fold(f64::MIN, f64::max);
        assert!(best >= 0.8, "best matching cosine {best}");
    }
    // each slice separates the two vocabularies
    let a = state.vocabulary.iter().position(|w| w == "flood").unwrap();
    let b = state.vocabulary.iter().position(|w| w == "vote").unwrap();
    for phi in [s0, s1] {
        let ta = (0..2).max_by(|&x, &y| phi[x][a].total_cmp(&phi[y][a])).unwrap();
        let tb = (0..2).max_by(|&x, &y| phi[x][b].total_cmp(&phi[y][b])).unwrap();
        assert_ne!(ta, tb);
    }
}

#[test]
fn fitting_is_deterministic_and_normalized() {
    let corpus = two_topic_corpus(3);
    let a = fit_topics(&corpus, &quick(3)).unwrap();
    let b = fit_topics(&corpus, &quick(3)).unwrap();
    assert_eq!(a.table, b.table);
    for (_, _, d) in a.table.iter() {
        assert!(d.probs().iter().all(|p| *p >= 0.0));
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }
    for phi in a.topic_word.values().flatten() {
        assert!((phi.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn planted_coherence_orders_topic_divergence() {
    let spec = SyntheticSpec {
        groups: 40,
        members_per_group: 30,
        slices: 4,
        ..SyntheticSpec::default()
    };
    let synth = generate(&spec).unwrap();
    let corpus = synth.corpus().unwrap();
    let state = fit_topics(&corpus, &TopicParams::default()).unwrap();
    let (mut coherent, mut mixed) = (Vec::new(), Vec::new());
    for g in &synth.planted {
        let group = SocialGroup::new(g.index, g.members.clone(), &corpus);
        let td = series(&group, corpus.num_slices(), &state.table, DEFAULT_EPSILON).mean_td().unwrap();
        if g.coherent { coherent.push(td) } else { mixed.push(td) }
    }
    assert_eq!((coherent.len(), mixed.len()), (20, 20));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (c, m) = (mean(&coherent), mean(&mixed));
    assert!(m - c >= 0.1, "coherent {c}, mixed {m}");
}

fn arb_distribution(k: usize) -> impl Strategy<Value = TopicDistribution> {
    proptest::collection::vec(0.0f64..1.0, k).prop_filter_map("zero mass", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-3).then(|| TopicDistribution::new(w.iter().map(|x| x / s).collect()).unwrap())
    })
}

proptest! {
    #[test]
    fn group_distribution_is_plain_average(ds in proptest::collection::vec(arb_distribution(3), 1..12)) {
        let refs: Vec<&TopicDistribution> = ds.iter().collect();
        let g = group_distribution(&refs).unwrap();
        for i in 0..3 {
            let mut sum = 0.0;
            for d in &ds {
                sum += d.probs()[i];
            }
            prop_assert_eq!(g.probs()[i], sum / ds.len() as f64);
        }
    }

    #[test]
    fn divergence_nonnegative_and_zero_only_when_equal(
        ds in proptest::collection::vec(arb_distribution(3), 1..8),
        copies in 1usize..6,
    ) {
        let refs: Vec<&TopicDistribution> = ds.iter().collect();
        let td = topic_divergence(&refs, DEFAULT_EPSILON).unwrap();
        prop_assert!(td >= 0.0);
        let all_equal = ds.iter().all(|d| d.probs() == ds[0].probs());
        let max_gap = ds
            .iter()
            .flat_map(|d| d.probs().iter().zip(ds[0].probs()).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if all_equal {
            prop_assert_eq!(td, 0.0);
        } else if max_gap > 1e-6 {
            prop_assert!(td > 0.0);
        }
        let same: Vec<&TopicDistribution> = std::iter::repeat_n(&ds[0], copies).collect();
        prop_assert_eq!(topic_divergence(&same, DEFAULT_EPSILON), Some(0.0));
    }
}

#[test]
fn random_member_order_does_not_change_divergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ds: Vec<TopicDistribution> = (0..10)
        .map(|_| {
            let w: Vec<f64> = (0..3).map(|_| rng.gen_range(0.01..1.0)).collect();
            let s: f64 = w.iter().sum();
            TopicDistribution::new(w.into_iter().map(|x| x / s).collect()).unwrap()
        })
        .collect();
    let mut refs: Vec<&TopicDistribution> = ds.iter().collect();
    let a = topic_divergence(&refs, DEFAULT_EPSILON).unwrap();
    refs.shuffle(&mut rng);
    let b = topic_divergence(&refs, DEFAULT_EPSILON).unwrap();
    assert!((a - b).abs() < 1e-12);
}
