//! Flat key-value pipeline configuration (TOML syntax, no tables).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::DEFAULT_SLICE_WIDTH;
use crate::error::{Error, Result};
use crate::grouping::{ClusterParams, FilterParams};
use crate::io_util::read_to_string;
use crate::topics::TopicParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Name used in report headers.
    pub dataset: String,
    pub posts: PathBuf,
    pub profiles: PathBuf,
    pub followers: PathBuf,
    /// Event lexicon, one term per line. Unset keeps every word.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    /// `pattern<TAB>country<TAB>state` table. Unset uses the bundled one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gazetteer: Option<PathBuf>,
    /// `phrase<TAB>CLASS` table. Unset uses the bundled one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expertise_lexicon: Option<PathBuf>,
    /// Precomputed `user,slice,p1..pK` table; replaces the built-in topic model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topics_provider: Option<PathBuf>,
    pub out: PathBuf,

    pub slice_width: i64,

    pub target_group_size: f64,
    pub seed: u64,
    pub weighted_interactions: bool,
    pub max_tuning_iterations: usize,

    pub min_group_size: usize,
    pub min_active_slices: usize,

    pub topics: usize,
    pub gibbs_iterations: usize,
    pub burn_in: usize,
    pub sample_window: usize,
    /// Unset means `50 / topics`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub eta: f64,
    pub chain_strength: f64,

    pub kl_epsilon: f64,
    pub event_nation: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let cluster = ClusterParams::default();
        let filter = FilterParams::default();
        let topics = TopicParams::default();
        PipelineConfig {
            dataset: "corpus".into(),
            posts: "posts.jsonl".into(),
            profiles: "profiles.jsonl".into(),
            followers: "followers.csv".into(),
            lexicon: None,
            gazetteer: None,
            expertise_lexicon: None,
            topics_provider: None,
            out: "out".into(),
            slice_width: DEFAULT_SLICE_WIDTH,
            target_group_size: cluster.target_avg_size,
            seed: cluster.seed,
            weighted_interactions: cluster.weighted,
            max_tuning_iterations: cluster.max_tuning_iterations,
            min_group_size: filter.min_size,
            min_active_slices: filter.min_active_slices,
            topics: topics.k,
            gibbs_iterations: topics.iterations,
            burn_in: topics.burn_in,
            sample_window: topics.sample_window,
            alpha: topics.alpha,
            eta: topics.eta,
            chain_strength: topics.chain_strength,
            kl_epsilon: crate::topics::DEFAULT_EPSILON,
            event_nation: "US".into(),
        }
    }
}

const OPTIONAL_KEYS: [(&str, &str); 5] = [
    ("lexicon", "event lexicon path; unset keeps every word"),
    ("gazetteer", "location table path; unset uses the bundled table"),
    ("expertise_lexicon", "expertise phrase table path; unset uses the bundled table"),
    ("topics_provider", "precomputed user,slice,p1..pK table; unset fits the built-in model"),
    ("alpha", "document-topic prior; unset means 50 / topics"),
];

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// Every key with its current value; unset optional keys appear commented out.
    pub fn dump(&self) -> String {
        let mut out = self.to_toml();
        let table: toml::Table = toml::from_str(&out).expect("own output parses");
        for (key, doc) in OPTIONAL_KEYS {
            if !table.contains_key(key) {
                out.push_str(&format!("# {key} = ...  ({doc})\n"));
            }
        }
        out
    }

    /// Reads a config file; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&read_to_string(path)?)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.posts, &mut self.profiles, &mut self.followers, &mut self.out] {
            fix(p);
        }
        for p in [
            &mut self.lexicon,
            &mut self.gazetteer,
            &mut self.expertise_lexicon,
            &mut self.topics_provider,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn cluster_params(&self) -> ClusterParams {
        ClusterParams {
            target_avg_size: self.target_group_size,
            seed: self.seed,
            weighted: self.weighted_interactions,
            max_tuning_iterations: self.max_tuning_iterations,
        }
    }

    pub fn filter_params(&self) -> FilterParams {
        FilterParams {
            min_size: self.min_group_size,
            min_active_slices: self.min_active_slices,
        }
    }

    pub fn topic_params(&self) -> TopicParams {
        TopicParams {
            k: self.topics,
            iterations: self.gibbs_iterations,
            burn_in: self.burn_in,
            sample_window: self.sample_window,
            alpha: self.alpha,
            eta: self.eta,
            chain_strength: self.chain_strength,
            seed: self.seed,
        }
    }
}
