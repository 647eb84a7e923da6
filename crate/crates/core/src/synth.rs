//! Synthetic event corpora with planted group structure, identity
//! concentration, follower density and topic coherence.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::PipelineConfig;
use crate::corpus::{Corpus, FollowerEdge, InteractionRecord, RawProfile, UserId, DEFAULT_SLICE_WIDTH};
use crate::error::{Error, Result};
use crate::grouping::InteractionGraph;
use crate::identity::{BUNDLED_EXPERTISE, BUNDLED_GAZETTEER};
use crate::io_util::write_atomic;

/// UTC midnight, 2011-10-30.
const EPOCH: i64 = 1_319_932_800;

const TOPIC_WORDS: [&[&str]; 3] = [
    &[
        "flood", "evacuation", "shelter", "rescue", "storm", "surge", "levee", "rainfall", "wind", "outage",
        "generator", "sandbags", "damage", "hurricane", "coast",
    ],
    &[
        "protest", "march", "rally", "police", "arrest", "camp", "occupy", "bank", "wallstreet", "union",
        "economy", "inequality", "banner", "square", "crowd",
    ],
    &[
        "censorship", "bill", "congress", "internet", "piracy", "blackout", "petition", "senate", "vote",
        "freedom", "copyright", "website", "boycott", "lobby", "hearing",
    ],
];

const LOCATIONS: [&str; 15] = [
    "Columbus, OH",
    "New York, NY",
    "Boston, MA",
    "Philadelphia, PA",
    "Los Angeles",
    "Chicago",
    "Houston",
    "Miami",
    "London",
    "Toronto",
    "Mumbai",
    "Paris",
    "Berlin",
    "Sydney",
    "Tokyo",
];

const DESCRIPTIONS: [&str; 10] = [
    "phd researcher at a state university",
    "entrepreneur and ceo",
    "political activist",
    "software engineer and geek",
    "blogger",
    "journalist covering local news",
    "photographer",
    "nfl player",
    "nurse",
    "coffee and long walks",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub groups: usize,
    pub members_per_group: usize,
    pub slices: usize,
    /// Fraction of groups (the first ones) whose members all post on the group's topic.
    pub coherent_fraction: f64,
    /// Fraction of groups (the first ones) sharing one location, expertise and AID class.
    pub concentrated_fraction: f64,
    /// Fraction of groups (the first ones) with dense follower subgraphs.
    pub dense_fraction: f64,
    pub dense_follow_prob: f64,
    pub sparse_follow_prob: f64,
    /// Probability a member posts in a given slice.
    pub activity_prob: f64,
    pub posts_per_active_slice: usize,
    pub tokens_per_post: usize,
    /// Probability a mention goes to a member of another group.
    pub cross_group_prob: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            groups: 40,
            members_per_group: 60,
            slices: 8,
            coherent_fraction: 0.5,
            concentrated_fraction: 0.5,
            dense_fraction: 0.5,
            dense_follow_prob: 0.3,
            sparse_follow_prob: 0.03,
            activity_prob: 0.7,
            posts_per_active_slice: 4,
            tokens_per_post: 10,
            cross_group_prob: 0.01,
            seed: 1,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &'static str, v: String| if ok { Ok(()) } else { Err(Error::invalid(what, v)) };
        check(self.groups >= 1, "synthetic groups", self.groups.to_string())?;
        check(self.members_per_group >= 2, "synthetic members per group", self.members_per_group.to_string())?;
        check(self.slices >= 1, "synthetic slices", self.slices.to_string())?;
        check(self.tokens_per_post >= 1, "synthetic tokens per post", self.tokens_per_post.to_string())?;
        for (what, p) in [
            ("coherent fraction", self.coherent_fraction),
            ("concentrated fraction", self.concentrated_fraction),
            ("dense fraction", self.dense_fraction),
            ("dense follow probability", self.dense_follow_prob),
            ("sparse follow probability", self.sparse_follow_prob),
            ("activity probability", self.activity_prob),
            ("cross-group probability", self.cross_group_prob),
        ] {
            check((0.0..=1.0).contains(&p), what, p.to_string())?;
        }
        Ok(())
    }

    fn first(&self, fraction: f64) -> usize {
        (fraction * self.groups as f64).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedGroup {
    pub index: usize,
    pub members: BTreeSet<UserId>,
    pub coherent: bool,
    pub concentrated: bool,
    pub dense: bool,
    pub topic: usize,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub spec: SyntheticSpec,
    pub records: Vec<InteractionRecord>,
    pub profiles: Vec<RawProfile>,
    pub followers: Vec<FollowerEdge>,
    pub planted: Vec<PlantedGroup>,
}

fn user_name(group: usize, member: usize) -> UserId {
    UserId::new(format!("g{group:03}u{member:03}"))
}

/// AID counters for class index `c` (bits: activity, popularity, diffusion).
fn aid_counters(c: usize, rng: &mut ChaCha8Rng) -> (u64, u64, u64) {
    let mut draw = |high: bool| if high { rng.gen_range(50..=500) } else { rng.gen_range(0..=10) };
    (draw(c & 4 != 0), draw(c & 2 != 0), draw(c & 1 != 0))
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_coherent = spec.first(spec.coherent_fraction);
    let n_concentrated = spec.first(spec.concentrated_fraction);
    let n_dense = spec.first(spec.dense_fraction);

    let planted: Vec<PlantedGroup> = (0..spec.groups)
        .map(|g| PlantedGroup {
            index: g,
            members: (0..spec.members_per_group).map(|m| user_name(g, m)).collect(),
            coherent: g < n_coherent,
            concentrated: g < n_concentrated,
            dense: g < n_dense,
            topic: g % TOPIC_WORDS.len(),
        })
        .collect();

    let mut profiles = Vec::new();
    for (i, g) in planted.iter().enumerate() {
        // concentrated groups pair up with the complementary AID class so the
        // corpus-wide medians fall between the low and high ranges
        let aid_class = if i % 2 == 0 { (i / 2) % 8 } else { 7 - (i / 2) % 8 };
        let mut previous_class = 0;
        for (m, u) in g.members.iter().enumerate() {
            let (location, description, class) = if g.concentrated {
                (LOCATIONS[i % LOCATIONS.len()], DESCRIPTIONS[i % DESCRIPTIONS.len()], aid_class)
            } else {
                // consecutive members take complementary classes for the same reason
                let class = if m % 2 == 0 { rng.gen_range(0..8) } else { 7 - previous_class };
                previous_class = class;
                (
                    *LOCATIONS.choose(&mut rng).expect("nonempty"),
                    *DESCRIPTIONS.choose(&mut rng).expect("nonempty"),
                    class,
                )
            };
            let (posts, mentions, retweets) = aid_counters(class, &mut rng);
            profiles.push(RawProfile {
                user_id: u.clone(),
                location: location.into(),
                description: description.into(),
                posts: Some(posts),
                mentions_received: Some(mentions),
                retweets_received: Some(retweets),
            });
        }
    }

    let mut followers = Vec::new();
    for g in &planted {
        let p = if g.dense { spec.dense_follow_prob } else { spec.sparse_follow_prob };
        for a in &g.members {
            for b in &g.members {
                if a != b && rng.gen_bool(p) {
                    followers.push(FollowerEdge::new(a.clone(), b.clone()));
                }
            }
        }
    }

    let mut records = Vec::new();
    let members: Vec<Vec<UserId>> = planted.iter().map(|g| g.members.iter().cloned().collect()).collect();
    for t in 0..spec.slices {
        let slice_start = EPOCH + t as i64 * DEFAULT_SLICE_WIDTH;
        for (gi, g) in planted.iter().enumerate() {
            for (mi, author) in members[gi].iter().enumerate() {
                if !rng.gen_bool(spec.activity_prob) {
                    continue;
                }
                let topic = if g.coherent { g.topic } else { rng.gen_range(0..TOPIC_WORDS.len()) };
                for p in 0..spec.posts_per_active_slice {
                    let tokens: Vec<String> = (0..spec.tokens_per_post)
                        .map(|_| TOPIC_WORDS[topic].choose(&mut rng).expect("nonempty").to_string())
                        .collect();
                    let target_group = if spec.groups > 1 && rng.gen_bool(spec.cross_group_prob) {
                        (gi + rng.gen_range(1..spec.groups)) % spec.groups
                    } else {
                        gi
                    };
                    let mut target = rng.gen_range(0..spec.members_per_group);
                    if target_group == gi && target == mi {
                        target = (target + 1) % spec.members_per_group;
                    }
                    let target = members[target_group][target].clone();
                    let (retweet_of, mentions) = if rng.gen_bool(0.25) {
                        (Some(target), Vec::new())
                    } else {
                        (None, vec![target])
                    };
                    records.push(InteractionRecord {
                        post_id: format!("s{t}-{author}-{p}"),
                        author: author.clone(),
                        timestamp: slice_start + rng.gen_range(0..DEFAULT_SLICE_WIDTH),
                        tokens,
                        retweet_of,
                        reply_to: None,
                        mentions,
                    });
                }
            }
        }
    }
    records.sort_by(|a, b| (a.timestamp, &a.post_id).cmp(&(b.timestamp, &b.post_id)));

    Ok(SyntheticCorpus {
        spec: spec.clone(),
        records,
        profiles,
        followers,
        planted,
    })
}

impl SyntheticCorpus {
    pub fn corpus(&self) -> Result<Corpus> {
        Corpus::from_parts(
            self.records.clone(),
            self.profiles.clone(),
            self.followers.clone(),
            DEFAULT_SLICE_WIDTH,
        )
    }

    pub fn lexicon(&self) -> Vec<&'static str> {
        let mut words: Vec<&str> = TOPIC_WORDS.iter().flat_map(|t| t.iter().copied()).collect();
        words.sort_unstable();
        words
    }

    /// Writes `posts.jsonl` (raw text, first token as a hashtag),
    /// `profiles.jsonl`, `followers.csv`, `gazetteer.tsv`, `expertise.tsv`,
    /// `lexicon.txt`, `planted.csv` and a `groupdyn.toml` pointing at them.
    pub fn write(&self, dir: &Path) -> Result<PipelineConfig> {
        let mut posts = String::new();
        for r in &self.records {
            let mut text = format!("#{}", r.tokens.first().map(String::as_str).unwrap_or(""));
            for tok in r.tokens.iter().skip(1) {
                text.push(' ');
                text.push_str(tok);
            }
            for m in &r.mentions {
                text.push_str(&format!(" @{m}"));
            }
            let v = serde_json::json!({
                "id": r.post_id,
                "user": r.author,
                "ts": r.timestamp,
                "text": text,
                "retweet_of": r.retweet_of,
                "mentions": r.mentions,
            });
            posts.push_str(&v.to_string());
            posts.push('\n');
        }
        write_atomic(&dir.join("posts.jsonl"), posts.as_bytes())?;

        let mut profiles = String::new();
        for p in &self.profiles {
            let v = serde_json::json!({
                "user": p.user_id,
                "location": p.location,
                "description": p.description,
                "posts": p.posts,
                "mentions_received": p.mentions_received,
                "retweets_received": p.retweets_received,
            });
            profiles.push_str(&v.to_string());
            profiles.push('\n');
        }
        write_atomic(&dir.join("profiles.jsonl"), profiles.as_bytes())?;

        let mut followers = String::from("follower,followee\n");
        for e in &self.followers {
            followers.push_str(&format!("{},{}\n", e.follower, e.followee));
        }
        write_atomic(&dir.join("followers.csv"), followers.as_bytes())?;

        write_atomic(&dir.join("gazetteer.tsv"), BUNDLED_GAZETTEER.as_bytes())?;
        write_atomic(&dir.join("expertise.tsv"), BUNDLED_EXPERTISE.as_bytes())?;
        let mut lexicon = self.lexicon().join("\n");
        lexicon.push('\n');
        write_atomic(&dir.join("lexicon.txt"), lexicon.as_bytes())?;

        let mut planted = String::from("group,user,coherent,concentrated,dense,topic\n");
        for g in &self.planted {
            for u in &g.members {
                planted.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    g.index, u, g.coherent, g.concentrated, g.dense, g.topic
                ));
            }
        }
        write_atomic(&dir.join("planted.csv"), planted.as_bytes())?;

        let config = PipelineConfig {
            dataset: "synthetic".into(),
            lexicon: Some("lexicon.txt".into()),
            gazetteer: Some("gazetteer.tsv".into()),
            expertise_lexicon: Some("expertise.tsv".into()),
            seed: self.spec.seed,
            ..PipelineConfig::default()
        };
        write_atomic(&dir.join("groupdyn.toml"), config.dump().as_bytes())?;
        Ok(config)
    }
}

/// Interaction graph of `blocks` blocks of `size` vertices; each pair is
/// joined with probability `p_in` inside a block and `p_out` across blocks.
/// Returns the graph and each vertex's block, indexed like `graph.vertices()`.
pub fn planted_partition(blocks: usize, size: usize, p_in: f64, p_out: f64, seed: u64) -> (InteractionGraph, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<UserId> = (0..blocks * size).map(|i| UserId::new(format!("v{i:06}"))).collect();
    let mut g = InteractionGraph::with_vertices(ids.iter().cloned());
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            let p = if i / size == j / size { p_in } else { p_out };
            if rng.gen_bool(p) {
                g.add_interaction(&ids[i], &ids[j]);
            }
        }
    }
    let labels = (0..ids.len()).map(|i| i / size).collect();
    (g, labels)
}
