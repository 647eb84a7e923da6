//! Fits the chained topic model on a synthetic corpus and compares the topic
//! divergence of coherent and mixed groups.

use groupdyn::grouping::SocialGroup;
use groupdyn::sustainability::series;
use groupdyn::synth::{generate, SyntheticSpec};
use groupdyn::topics::{fit_topics, group_distribution, topic_divergence, TopicDistribution, TopicParams, DEFAULT_EPSILON};

fn main() {
    let a = TopicDistribution::new(vec![0.6, 0.2, 0.2]).unwrap();
    let b = TopicDistribution::new(vec![0.2, 0.6, 0.2]).unwrap();
    let g = group_distribution(&[&a, &b]).unwrap();
    println!("group distribution {:?}, TD = {:.4}", g.probs(), topic_divergence(&[&a, &b], DEFAULT_EPSILON).unwrap());

    let spec = SyntheticSpec {
        groups: 8,
        members_per_group: 25,
        slices: 4,
        ..SyntheticSpec::default()
    };
    let synth = generate(&spec).unwrap();
    let corpus = synth.corpus().unwrap();
    let state = fit_topics(&corpus, &TopicParams::default()).unwrap();
    for k in 0..3 {
        let words: Vec<&str> = state.top_words(0, k, 5).into_iter().map(|(w, _)| w).collect();
        println!("slice 0 topic {k}: {}", words.join(" "));
    }
    for p in &synth.planted {
        let group = SocialGroup::new(p.index, p.members.clone(), &corpus);
        let td = series(&group, corpus.num_slices(), &state.table, DEFAULT_EPSILON).mean_td().unwrap();
        println!("group {} ({}): mean TD {td:.4}", p.index, if p.coherent { "coherent" } else { "mixed" });
    }
}
