//! Per-user, per-slice topic distributions and group topic divergence.
//!
//! Topic distributions come either from [`fit_topics`], a collapsed Gibbs LDA
//! run slice by slice where each slice's topic-word prior is pulled toward
//! the previous slice's estimate, or from an external provider file read by
//! [`load_topics`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, UserId};
use crate::error::{Error, Result};
use crate::io_util::read_to_string;

/// Tolerance accepted when validating externally supplied rows.
const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// A probability vector over `K` topics.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDistribution(Vec<f64>);

impl TopicDistribution {
    /// Validates (finite, non-negative, sums to 1 within 1e-6) and renormalizes.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("topic distribution", "no topics"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("topic distribution", format!("{probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::invalid("topic distribution", format!("sums to {sum}")));
        }
        Ok(TopicDistribution::normalized(probs))
    }

    fn normalized(mut probs: Vec<f64>) -> Self {
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        TopicDistribution(probs)
    }

    pub fn uniform(k: usize) -> Self {
        TopicDistribution(vec![1.0 / k as f64; k])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }
}

/// `β_u^t` for every (user, slice) that has a distribution.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TopicTable {
    k: usize,
    rows: BTreeMap<(UserId, usize), TopicDistribution>,
}

impl TopicTable {
    pub fn new(k: usize) -> Self {
        TopicTable {
            k,
            rows: BTreeMap::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn insert(&mut self, user: UserId, slice: usize, dist: TopicDistribution) -> Result<()> {
        if dist.k() != self.k {
            return Err(Error::invalid(
                "topic distribution",
                format!("expected {} topics, got {}", self.k, dist.k()),
            ));
        }
        let key = (user, slice);
        if self.rows.contains_key(&key) {
            return Err(Error::DuplicateTopicRow {
                user: key.0 .0,
                slice,
            });
        }
        self.rows.insert(key, dist);
        Ok(())
    }

    pub fn get(&self, user: &UserId, slice: usize) -> Option<&TopicDistribution> {
        self.rows.get(&(user.clone(), slice))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&UserId, usize, &TopicDistribution)> {
        self.rows.iter().map(|((u, t), d)| (u, *t, d))
    }

    /// Provider format: `user,slice,p1,...,pK`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("user,slice");
        for i in 1..=self.k {
            let _ = write!(out, ",p{i}");
        }
        out.push('\n');
        for ((u, t), d) in &self.rows {
            let _ = write!(out, "{u},{t}");
            for p in d.probs() {
                let _ = write!(out, ",{p}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the provider format. Rows must sum to 1 (within 1e-6), be
    /// unique per (user, slice), and reference slices `< num_slices` when a
    /// slice count is given.
    pub fn parse_csv(text: &str, num_slices: Option<usize>) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().unwrap_or("");
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let k = cols.len().saturating_sub(2);
        let expected: Vec<String> = ["user".to_string(), "slice".to_string()]
            .into_iter()
            .chain((1..=k).map(|i| format!("p{i}")))
            .collect();
        if k == 0 || cols != expected {
            return Err(Error::MalformedHeader {
                path: "<topics>".into(),
                expected: "user,slice,p1,...,pK".into(),
                found: header.into(),
            });
        }
        let mut table = TopicTable::new(k);
        for line in lines {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != k + 2 || cells[0].is_empty() {
                return Err(Error::invalid("topic row", line));
            }
            let user = cells[0].to_string();
            let slice: usize = cells[1].parse().map_err(|_| Error::invalid("topic row", line))?;
            if num_slices.is_some_and(|n| slice >= n) {
                return Err(Error::UnknownSlice { user, slice });
            }
            let probs = cells[2..]
                .iter()
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::invalid("topic row", line))?;
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::NonNormalized { user, slice, sum });
            }
            table.insert(UserId(user), slice, TopicDistribution::new(probs)?)?;
        }
        Ok(table)
    }
}

/// Reads an externally computed topic table.
pub fn load_topics(path: &Path, num_slices: Option<usize>) -> Result<TopicTable> {
    TopicTable::parse_csv(&read_to_string(path)?, num_slices)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicParams {
    pub k: usize,
    pub iterations: usize,
    pub burn_in: usize,
    /// Number of final iterations averaged into the posterior mean.
    pub sample_window: usize,
    /// Symmetric document-topic prior; `None` means `50 / K`.
    pub alpha: Option<f64>,
    /// Symmetric topic-word prior.
    pub eta: f64,
    /// Weight of the previous slice's topic-word estimate in the prior, in `[0, 1]`.
    pub chain_strength: f64,
    pub seed: u64,
}

impl Default for TopicParams {
    fn default() -> Self {
        TopicParams {
            k: 3,
            iterations: 500,
            burn_in: 100,
            sample_window: 100,
            alpha: None,
            eta: 0.01,
            chain_strength: 0.5,
            seed: 1,
        }
    }
}

impl TopicParams {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("topic count", "K must be at least 1"));
        }
        if !(self.alpha() > 0.0) || !(self.eta > 0.0) {
            return Err(Error::invalid("topic priors", "alpha and eta must be positive"));
        }
        if !(0.0..=1.0).contains(&self.chain_strength) {
            return Err(Error::invalid("chain strength", self.chain_strength.to_string()));
        }
        Ok(())
    }
}

/// Fitted model: topic-word estimates per slice plus the user table.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModelState {
    pub params: TopicParams,
    pub vocabulary: Vec<String>,
    /// `topic_word[t][topic][word]`, only for slices that had tokens.
    pub topic_word: BTreeMap<usize, Vec<Vec<f64>>>,
    pub table: TopicTable,
}

impl TopicModelState {
    /// Highest-probability words of one topic at one slice.
    pub fn top_words(&self, slice: usize, topic: usize, n: usize) -> Vec<(&str, f64)> {
        let Some(phi) = self.topic_word.get(&slice) else {
            return Vec::new();
        };
        let mut ranked: Vec<(usize, f64)> = phi[topic].iter().copied().enumerate().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked
            .into_iter()
            .take(n)
            .map(|(w, p)| (self.vocabulary[w].as_str(), p))
            .collect()
    }

    /// CSV `slice,topic,rank,word,probability` with the top `n` words.
    pub fn top_words_csv(&self, n: usize) -> String {
        let mut out = String::from("slice,topic,rank,word,probability\n");
        for &t in self.topic_word.keys() {
            for topic in 0..self.params.k {
                for (rank, (w, p)) in self.top_words(t, topic, n).into_iter().enumerate() {
                    let _ = writeln!(out, "{t},{topic},{},{w},{p}", rank + 1);
                }
            }
        }
        out
    }
}

struct SliceFit {
    theta: Vec<Vec<f64>>,
    /// Word-major: `phi[w * k + topic]`.
    phi: Vec<f64>,
}

/// Collapsed Gibbs sampling on one slice's documents.
fn sample_slice(
    docs: &[Vec<usize>],
    vocab_size: usize,
    prior: &[f64],
    init: Option<&[f64]>,
    params: &TopicParams,
    rng: &mut ChaCha8Rng,
) -> SliceFit {
    let k = params.k;
    let alpha = params.alpha();
    let mut prior_sum = vec![0.0; k];
    for w in 0..vocab_size {
        for t in 0..k {
            prior_sum[t] += prior[w * k + t];
        }
    }

    let mut z: Vec<Vec<usize>> = Vec::with_capacity(docs.len());
    let mut ndk = vec![0u32; docs.len() * k];
    let mut nwk = vec![0u32; vocab_size * k];
    let mut nk = vec![0u32; k];
    let mut weights = vec![0.0; k];
    for (d, doc) in docs.iter().enumerate() {
        let mut zd = Vec::with_capacity(doc.len());
        for &w in doc {
            let topic = match init {
                Some(phi) => {
                    let row = &phi[w * k..(w + 1) * k];
                    draw(row, row.iter().sum(), rng)
                }
                None => rng.gen_range(0..k),
            };
            ndk[d * k + topic] += 1;
            nwk[w * k + topic] += 1;
            nk[topic] += 1;
            zd.push(topic);
        }
        z.push(zd);
    }

    let samples = params
        .iterations
        .saturating_sub(params.burn_in)
        .min(params.sample_window)
        .max(1);
    let start = params.iterations.saturating_sub(samples);
    let mut theta_acc = vec![0.0; docs.len() * k];
    let mut phi_acc = vec![0.0; vocab_size * k];
    let mut taken = 0usize;

    let mut accumulate = |ndk: &[u32], nwk: &[u32], nk: &[u32]| {
        for (d, doc) in docs.iter().enumerate() {
            let denom = doc.len() as f64 + k as f64 * alpha;
            for t in 0..k {
                theta_acc[d * k + t] += (ndk[d * k + t] as f64 + alpha) / denom;
            }
        }
        for w in 0..vocab_size {
            for t in 0..k {
                phi_acc[w * k + t] += (nwk[w * k + t] as f64 + prior[w * k + t]) / (nk[t] as f64 + prior_sum[t]);
            }
        }
    };

    for iter in 0..params.iterations {
        for (d, doc) in docs.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let old = z[d][i];
                ndk[d * k + old] -= 1;
                nwk[w * k + old] -= 1;
                nk[old] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    let p = (ndk[d * k + t] as f64 + alpha) * (nwk[w * k + t] as f64 + prior[w * k + t])
                        / (nk[t] as f64 + prior_sum[t]);
                    weights[t] = p;
                    total += p;
                }
                let new = draw(&weights, total, rng);
                z[d][i] = new;
                ndk[d * k + new] += 1;
                nwk[w * k + new] += 1;
                nk[new] += 1;
            }
        }
        if iter >= start {
            accumulate(&ndk, &nwk, &nk);
            taken += 1;
        }
    }
    if taken == 0 {
        accumulate(&ndk, &nwk, &nk);
        taken = 1;
    }

    let n = taken as f64;
    let theta = (0..docs.len())
        .map(|d| {
            let row: Vec<f64> = theta_acc[d * k..(d + 1) * k].iter().map(|x| x / n).collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let mut phi: Vec<f64> = phi_acc.into_iter().map(|x| x / n).collect();
    for t in 0..k {
        let s: f64 = (0..vocab_size).map(|w| phi[w * k + t]).sum();
        for w in 0..vocab_size {
            phi[w * k + t] /= s;
        }
    }
    SliceFit { theta, phi }
}

fn draw(weights: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Fits the chained per-slice topic model. One document is everything a user
/// posted in one slice; slices are fit in order, and slice `t`'s topic-word
/// prior blends the symmetric `η` prior with `η·V` times the previous fitted
/// slice's topic-word estimate (weight `chain_strength`), whose topics also
/// seed the initial assignments.
pub fn fit_topics(corpus: &Corpus, params: &TopicParams) -> Result<TopicModelState> {
    params.validate()?;
    let vocab: BTreeSet<&str> = corpus
        .records()
        .iter()
        .flat_map(|r| r.tokens.iter().map(String::as_str))
        .collect();
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let vocabulary: Vec<String> = vocab.iter().map(|s| s.to_string()).collect();
    let word_id: BTreeMap<&str, usize> = vocab.iter().enumerate().map(|(i, w)| (*w, i)).collect();
    let v = vocabulary.len();
    let k = params.k;

    let mut docs_by_slice: BTreeMap<usize, BTreeMap<&UserId, Vec<usize>>> = BTreeMap::new();
    for (t, r) in corpus.sliced_records() {
        if r.tokens.is_empty() {
            continue;
        }
        docs_by_slice
            .entry(t)
            .or_default()
            .entry(&r.author)
            .or_default()
            .extend(r.tokens.iter().map(|tok| word_id[tok.as_str()]));
    }

    let mut table = TopicTable::new(k);
    let mut topic_word = BTreeMap::new();
    let mut previous: Option<Vec<f64>> = None;
    for (&t, docs) in &docs_by_slice {
        let users: Vec<&UserId> = docs.keys().copied().collect();
        let token_lists: Vec<Vec<usize>> = docs.values().cloned().collect();
        let prior: Vec<f64> = match &previous {
            Some(phi) => phi
                .iter()
                .map(|&p| (1.0 - params.chain_strength) * params.eta + params.chain_strength * params.eta * v as f64 * p)
                .collect(),
            None => vec![params.eta; v * k],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ (t as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let fit = sample_slice(&token_lists, v, &prior, previous.as_deref(), params, &mut rng);
        debug!("slice {t}: {} documents", users.len());
        for (u, theta) in users.into_iter().zip(fit.theta) {
            table.insert(u.clone(), t, TopicDistribution::normalized(theta))?;
        }
        let by_topic = (0..k).map(|topic| (0..v).map(|w| fit.phi[w * k + topic]).collect()).collect();
        topic_word.insert(t, by_topic);
        previous = Some(fit.phi);
    }

    Ok(TopicModelState {
        params: params.clone(),
        vocabulary,
        topic_word,
        table,
    })
}

/// Component-wise mean of member distributions; `None` when empty.
pub fn group_distribution(members: &[&TopicDistribution]) -> Option<TopicDistribution> {
    let first = members.first()?;
    let mut mean = vec![0.0; first.k()];
    for d in members {
        for (m, p) in mean.iter_mut().zip(d.probs()) {
            *m += p;
        }
    }
    let n = members.len() as f64;
    Some(TopicDistribution(mean.into_iter().map(|x| x / n).collect()))
}

/// Smoothing added to both sides of the divergence.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Adds `eps` to every entry and renormalizes.
pub fn smooth(p: &[f64], eps: f64) -> Vec<f64> {
    let total = 1.0 + eps * p.len() as f64;
    p.iter().map(|x| (x + eps) / total).collect()
}

/// `KL(p ‖ q)` in nats; terms with `p_i = 0` contribute 0.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum()
}

/// Mean over members of `KL(group ‖ member)`, both sides ε-smoothed.
pub fn topic_divergence(members: &[&TopicDistribution], eps: f64) -> Option<f64> {
    let group = group_distribution(members)?;
    if members.iter().all(|m| m.probs() == members[0].probs()) {
        return Some(0.0);
    }
    let g = smooth(group.probs(), eps);
    let total: f64 = members.iter().map(|m| kl_divergence(&g, &smooth(m.probs(), eps))).sum();
    Some((total / members.len() as f64).max(0.0))
}

/// Distributions at slice `t` of the snapshot members that have one.
pub fn member_distributions<'a>(g_t: &BTreeSet<UserId>, t: usize, table: &'a TopicTable) -> Vec<&'a TopicDistribution> {
    g_t.iter().filter_map(|u| table.get(u, t)).collect()
}

/// `TD(g_t)` over the members of `g_t` with a distribution at slice `t`.
pub fn group_topic_divergence(g_t: &BTreeSet<UserId>, t: usize, table: &TopicTable, eps: f64) -> Option<f64> {
    topic_divergence(&member_distributions(g_t, t, table), eps)
}
