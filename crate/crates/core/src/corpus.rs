//! Corpus ingestion: posts, profiles and follower edges, plus time slicing
//! and event-lexicon tokenization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::io_util::{read_to_string, write_atomic};

pub const DEFAULT_SLICE_WIDTH: i64 = 86_400;
const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub String);

impl UserId {
    pub fn new(id: impl Into<String>) -> Self {
        UserId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for UserId {
    fn from(s: &str) -> Self {
        UserId(s.to_owned())
    }
}

impl From<String> for UserId {
    fn from(s: String) -> Self {
        UserId(s)
    }
}

/// One post with its interaction targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionRecord {
    pub post_id: String,
    pub author: UserId,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    /// Event-vocabulary terms, lowercase, hashtags without the leading `#`.
    pub tokens: Vec<String>,
    pub retweet_of: Option<UserId>,
    pub reply_to: Option<UserId>,
    pub mentions: Vec<UserId>,
}

impl InteractionRecord {
    /// Every interaction target of this post, one entry per retweet, reply or
    /// mention event (self-targets included; graph construction drops them).
    pub fn targets(&self) -> impl Iterator<Item = &UserId> {
        self.retweet_of
            .iter()
            .chain(self.reply_to.iter())
            .chain(self.mentions.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UserProfile {
    pub user_id: UserId,
    pub location: String,
    pub description: String,
    /// Posts authored (activity).
    pub post_count: u64,
    /// Mentions received (popularity).
    pub mention_count: u64,
    /// Retweets of the user's posts (diffusion strength).
    pub retweeted_count: u64,
}

impl UserProfile {
    pub fn empty(user_id: UserId) -> Self {
        UserProfile {
            user_id,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FollowerEdge {
    pub follower: UserId,
    pub followee: UserId,
}

impl FollowerEdge {
    pub fn new(follower: impl Into<UserId>, followee: impl Into<UserId>) -> Self {
        FollowerEdge {
            follower: follower.into(),
            followee: followee.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeSlice {
    pub index: usize,
    pub start: i64,
    pub end: i64,
}

/// Maps timestamps onto fixed-width slices counted from a UTC midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliceClock {
    start: i64,
    width: i64,
}

impl SliceClock {
    pub fn new(start: i64, width: i64) -> Result<Self> {
        if width <= 0 {
            return Err(Error::invalid("slice width", width.to_string()));
        }
        Ok(SliceClock { start, width })
    }

    /// Clock whose origin is the UTC midnight at or before `first_timestamp`.
    pub fn starting_at_midnight(first_timestamp: i64, width: i64) -> Result<Self> {
        SliceClock::new(first_timestamp.div_euclid(SECONDS_PER_DAY) * SECONDS_PER_DAY, width)
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn width(&self) -> i64 {
        self.width
    }

    pub fn slice_of(&self, timestamp: i64) -> Result<usize> {
        if timestamp < self.start {
            return Err(Error::BeforeCorpusStart {
                timestamp,
                start: self.start,
            });
        }
        Ok(((timestamp - self.start) / self.width) as usize)
    }

    pub fn slice(&self, index: usize) -> TimeSlice {
        let start = self.start + index as i64 * self.width;
        TimeSlice {
            index,
            start,
            end: start + self.width,
        }
    }
}

/// Splits text into lowercase words; `#` and punctuation act as separators.
fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn normalize_term(term: &str) -> String {
    words(term).join(" ")
}

/// The event lexicon: single words, multi-word phrases and de-`#`-ed hashtags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    terms: BTreeSet<String>,
    max_words: usize,
}

impl Vocabulary {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let terms: BTreeSet<String> = terms
            .into_iter()
            .map(|t| normalize_term(t.as_ref()))
            .filter(|t| !t.is_empty())
            .collect();
        let max_words = terms
            .iter()
            .map(|t| t.split(' ').count())
            .max()
            .unwrap_or(0);
        Vocabulary { terms, max_words }
    }

    /// One term or phrase per line; blank lines and `#`-prefixed comment
    /// lines that contain whitespace are ignored (a bare `#tag` is a term).
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        Ok(Vocabulary::new(text.lines().filter(|l| {
            let l = l.trim();
            !l.is_empty() && !(l.starts_with("# ") || l == "#")
        })))
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    /// Greedy longest-match tokenization: at each word position the longest
    /// lexicon phrase starting there is emitted; unmatched words are dropped.
    pub fn tokenize(&self, raw_text: &str) -> Vec<String> {
        let ws = words(raw_text);
        let mut out = Vec::new();
        let mut i = 0;
        while i < ws.len() {
            let longest = self.max_words.min(ws.len() - i);
            let hit = (1..=longest).rev().find_map(|n| {
                let candidate = ws[i..i + n].join(" ");
                self.terms.contains(&candidate).then_some((candidate, n))
            });
            match hit {
                Some((term, n)) => {
                    out.push(term);
                    i += n;
                }
                None => i += 1,
            }
        }
        out
    }
}

/// Free-function form of [`Vocabulary::tokenize`].
pub fn tokenize(raw_text: &str, vocabulary: &Vocabulary) -> Vec<String> {
    vocabulary.tokenize(raw_text)
}

#[derive(Debug, Clone)]
pub struct CorpusConfig {
    pub slice_width: i64,
    /// When set, tokens are restricted to this lexicon.
    pub vocabulary: Option<Vocabulary>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            slice_width: DEFAULT_SLICE_WIDTH,
            vocabulary: None,
        }
    }
}

/// Counts of input lines that were dropped during loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub skipped_posts: usize,
    pub skipped_profiles: usize,
    pub skipped_followers: usize,
    pub duplicate_followers: usize,
}

/// An immutable, sliced corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    records: Vec<InteractionRecord>,
    record_slices: Vec<usize>,
    profiles: BTreeMap<UserId, UserProfile>,
    unknown_users: BTreeSet<UserId>,
    followers: BTreeSet<FollowerEdge>,
    authored_slices: BTreeMap<UserId, BTreeSet<usize>>,
    clock: SliceClock,
    num_slices: usize,
    report: LoadReport,
}

#[derive(Debug, Default, Clone, Copy)]
struct Counters {
    posts: u64,
    mentions: u64,
    retweets: u64,
}

/// Profile as read from disk; counters are optional and filled from the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawProfile {
    pub user_id: UserId,
    pub location: String,
    pub description: String,
    pub posts: Option<u64>,
    pub mentions_received: Option<u64>,
    pub retweets_received: Option<u64>,
}

impl From<UserProfile> for RawProfile {
    fn from(p: UserProfile) -> Self {
        RawProfile {
            user_id: p.user_id,
            location: p.location,
            description: p.description,
            posts: Some(p.post_count),
            mentions_received: Some(p.mention_count),
            retweets_received: Some(p.retweeted_count),
        }
    }
}

impl Corpus {
    /// Builds a corpus from in-memory parts.
    ///
    /// Follower self-loops are dropped and duplicates collapsed; missing
    /// profile counters are recomputed from the posts; authors and targets
    /// without a profile get an empty one and are reported as unknown.
    pub fn from_parts(
        records: Vec<InteractionRecord>,
        profiles: Vec<RawProfile>,
        followers: Vec<FollowerEdge>,
        slice_width: i64,
    ) -> Result<Self> {
        let mut report = LoadReport::default();
        let mut follower_set = BTreeSet::new();
        for edge in followers {
            if edge.follower == edge.followee {
                report.skipped_followers += 1;
            } else if !follower_set.insert(edge) {
                report.duplicate_followers += 1;
            }
        }
        Corpus::assemble(records, profiles, follower_set, slice_width, report)
    }

    fn assemble(
        records: Vec<InteractionRecord>,
        raw_profiles: Vec<RawProfile>,
        followers: BTreeSet<FollowerEdge>,
        slice_width: i64,
        report: LoadReport,
    ) -> Result<Self> {
        for r in &records {
            if r.author.as_str().is_empty() {
                return Err(Error::invalid("post", format!("post `{}` has no author", r.post_id)));
            }
        }
        let first = records.iter().map(|r| r.timestamp).min().unwrap_or(0);
        let clock = SliceClock::starting_at_midnight(first, slice_width)?;
        let record_slices = records
            .iter()
            .map(|r| clock.slice_of(r.timestamp))
            .collect::<Result<Vec<_>>>()?;
        let num_slices = record_slices.iter().max().map_or(0, |m| m + 1);

        let mut counters: BTreeMap<UserId, Counters> = BTreeMap::new();
        let mut authored_slices: BTreeMap<UserId, BTreeSet<usize>> = BTreeMap::new();
        for (r, &slice) in records.iter().zip(&record_slices) {
            counters.entry(r.author.clone()).or_default().posts += 1;
            authored_slices.entry(r.author.clone()).or_default().insert(slice);
            if let Some(t) = &r.retweet_of {
                counters.entry(t.clone()).or_default().retweets += 1;
            }
            if let Some(t) = &r.reply_to {
                counters.entry(t.clone()).or_default();
            }
            for m in &r.mentions {
                counters.entry(m.clone()).or_default().mentions += 1;
            }
        }

        let mut profiles = BTreeMap::new();
        for raw in raw_profiles {
            if profiles.contains_key(&raw.user_id) {
                return Err(Error::DuplicateUser(raw.user_id.0));
            }
            let c = counters.get(&raw.user_id).copied().unwrap_or_default();
            let profile = UserProfile {
                user_id: raw.user_id.clone(),
                location: raw.location,
                description: raw.description,
                post_count: raw.posts.unwrap_or(c.posts),
                mention_count: raw.mentions_received.unwrap_or(c.mentions),
                retweeted_count: raw.retweets_received.unwrap_or(c.retweets),
            };
            profiles.insert(raw.user_id, profile);
        }

        let mut unknown_users = BTreeSet::new();
        for (user, c) in &counters {
            if !profiles.contains_key(user) {
                unknown_users.insert(user.clone());
                profiles.insert(
                    user.clone(),
                    UserProfile {
                        post_count: c.posts,
                        mention_count: c.mentions,
                        retweeted_count: c.retweets,
                        ..UserProfile::empty(user.clone())
                    },
                );
            }
        }
        if !unknown_users.is_empty() {
            debug!("{} users without a profile", unknown_users.len());
        }

        Ok(Corpus {
            records,
            record_slices,
            profiles,
            unknown_users,
            followers,
            authored_slices,
            clock,
            num_slices,
            report,
        })
    }

    /// Loads the three input files. Malformed post/profile lines and invalid
    /// follower rows are skipped and counted in [`Corpus::report`].
    pub fn load(
        posts_path: &Path,
        profiles_path: &Path,
        followers_path: &Path,
        config: &CorpusConfig,
    ) -> Result<Self> {
        let mut report = LoadReport::default();
        let (records, skipped) = read_posts(posts_path, config.vocabulary.as_ref())?;
        report.skipped_posts = skipped;
        let (profiles, skipped) = read_profiles(profiles_path)?;
        report.skipped_profiles = skipped;
        let (edges, skipped, duplicates) = read_followers(followers_path)?;
        report.skipped_followers = skipped;
        report.duplicate_followers = duplicates;
        if report.skipped_posts + report.skipped_profiles + report.skipped_followers > 0 {
            warn!(
                "skipped {} post lines, {} profile lines, {} follower rows",
                report.skipped_posts, report.skipped_profiles, report.skipped_followers
            );
        }
        Corpus::assemble(records, profiles, edges, config.slice_width, report)
    }

    pub fn records(&self) -> &[InteractionRecord] {
        &self.records
    }

    /// Slice index of the `i`-th record.
    pub fn record_slice(&self, i: usize) -> usize {
        self.record_slices[i]
    }

    /// Records paired with their slice index.
    pub fn sliced_records(&self) -> impl Iterator<Item = (usize, &InteractionRecord)> {
        self.record_slices.iter().copied().zip(self.records.iter())
    }

    pub fn clock(&self) -> SliceClock {
        self.clock
    }

    pub fn num_slices(&self) -> usize {
        self.num_slices
    }

    pub fn slices(&self) -> impl Iterator<Item = TimeSlice> + '_ {
        (0..self.num_slices).map(|i| self.clock.slice(i))
    }

    pub fn slice_of(&self, timestamp: i64) -> Result<usize> {
        self.clock.slice_of(timestamp)
    }

    /// Profile for `user`; users absent from the profiles file get an empty
    /// profile with corpus-derived counters. `None` only for users the corpus
    /// never saw.
    pub fn profile(&self, user: &UserId) -> Option<&UserProfile> {
        self.profiles.get(user)
    }

    /// All users: profiled users plus every author and interaction target.
    pub fn users(&self) -> impl Iterator<Item = &UserId> {
        self.profiles.keys()
    }

    pub fn profiles(&self) -> impl Iterator<Item = &UserProfile> {
        self.profiles.values()
    }

    pub fn num_users(&self) -> usize {
        self.profiles.len()
    }

    /// Users appearing in posts but missing from the profiles file.
    pub fn unknown_users(&self) -> &BTreeSet<UserId> {
        &self.unknown_users
    }

    pub fn is_known(&self, user: &UserId) -> bool {
        self.profiles.contains_key(user) && !self.unknown_users.contains(user)
    }

    pub fn followers(&self) -> &BTreeSet<FollowerEdge> {
        &self.followers
    }

    pub fn report(&self) -> &LoadReport {
        &self.report
    }

    /// Slices in which `user` authored at least one post.
    pub fn active_slices(&self, user: &UserId) -> Option<&BTreeSet<usize>> {
        self.authored_slices.get(user)
    }

    /// Writes the corpus in canonical form (`posts.jsonl`, `profiles.jsonl`,
    /// `followers.csv`) so that [`Corpus::load`] without a vocabulary
    /// reproduces it.
    pub fn write_canonical(&self, dir: &Path) -> Result<()> {
        let mut posts = String::new();
        for r in &self.records {
            let v = serde_json::json!({
                "id": r.post_id,
                "user": r.author,
                "ts": r.timestamp,
                "tokens": r.tokens,
                "retweet_of": r.retweet_of,
                "reply_to": r.reply_to,
                "mentions": r.mentions,
            });
            posts.push_str(&v.to_string());
            posts.push('\n');
        }
        write_atomic(&dir.join("posts.jsonl"), posts.as_bytes())?;

        let mut profiles = String::new();
        for p in self.profiles.values().filter(|p| !self.unknown_users.contains(&p.user_id)) {
            let v = serde_json::json!({
                "user": p.user_id,
                "location": p.location,
                "description": p.description,
                "posts": p.post_count,
                "mentions_received": p.mention_count,
                "retweets_received": p.retweeted_count,
            });
            profiles.push_str(&v.to_string());
            profiles.push('\n');
        }
        write_atomic(&dir.join("profiles.jsonl"), profiles.as_bytes())?;

        let mut followers = String::from("follower,followee\n");
        for e in &self.followers {
            followers.push_str(&format!("{},{}\n", e.follower, e.followee));
        }
        write_atomic(&dir.join("followers.csv"), followers.as_bytes())
    }
}

fn json_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn opt_user(v: Option<&Value>) -> std::result::Result<Option<UserId>, ()> {
    match v {
        None | Some(Value::Null) => Ok(None),
        Some(v) => json_string(v)
            .filter(|s| !s.is_empty())
            .map(|s| Some(UserId(s)))
            .ok_or(()),
    }
}

/// Parses `ts` as epoch seconds (number or numeric string) or ISO-8601 UTC.
pub fn parse_timestamp(v: &Value) -> Option<i64> {
    match v {
        Value::Number(n) => n.as_f64().filter(|x| x.is_finite()).map(|x| x.floor() as i64),
        Value::String(s) => {
            let s = s.trim();
            if let Ok(x) = s.parse::<f64>() {
                return x.is_finite().then(|| x.floor() as i64);
            }
            if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
                return Some(dt.timestamp());
            }
            NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
                .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
                .ok()
                .map(|dt| dt.and_utc().timestamp())
        }
        _ => None,
    }
}

fn normalize_given_token(tok: &str, vocabulary: Option<&Vocabulary>) -> Option<String> {
    let t = tok.trim().trim_start_matches('#').to_lowercase();
    if t.is_empty() {
        return None;
    }
    match vocabulary {
        Some(v) => {
            let t = normalize_term(&t);
            v.contains(&t).then_some(t)
        }
        None => Some(t),
    }
}

fn parse_post(line: &str, vocabulary: Option<&Vocabulary>) -> Option<InteractionRecord> {
    let v: Value = serde_json::from_str(line).ok()?;
    let obj = v.as_object()?;
    let post_id = json_string(obj.get("id")?)?;
    let author = json_string(obj.get("user")?).filter(|s| !s.is_empty())?;
    let timestamp = parse_timestamp(obj.get("ts")?)?;
    let tokens = match (obj.get("tokens"), obj.get("text")) {
        (Some(Value::Array(toks)), _) => {
            let mut out = Vec::with_capacity(toks.len());
            for t in toks {
                if let Some(t) = normalize_given_token(t.as_str()?, vocabulary) {
                    out.push(t);
                }
            }
            out
        }
        (None | Some(Value::Null), Some(Value::String(text))) => match vocabulary {
            Some(v) => v.tokenize(text),
            None => words(text),
        },
        (None | Some(Value::Null), None | Some(Value::Null)) => Vec::new(),
        _ => return None,
    };
    let retweet_of = opt_user(obj.get("retweet_of")).ok()?;
    let reply_to = opt_user(obj.get("reply_to")).ok()?;
    let mentions = match obj.get("mentions") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(ms)) => ms
            .iter()
            .map(|m| json_string(m).filter(|s| !s.is_empty()).map(UserId))
            .collect::<Option<Vec<_>>>()?,
        _ => return None,
    };
    Some(InteractionRecord {
        post_id,
        author: UserId(author),
        timestamp,
        tokens,
        retweet_of,
        reply_to,
        mentions,
    })
}

fn read_posts(path: &Path, vocabulary: Option<&Vocabulary>) -> Result<(Vec<InteractionRecord>, usize)> {
    let text = read_to_string(path)?;
    let mut records = Vec::new();
    let mut skipped = 0;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_post(line, vocabulary) {
            Some(r) => records.push(r),
            None => {
                debug!("{}:{}: malformed post skipped", path.display(), lineno + 1);
                skipped += 1;
            }
        }
    }
    Ok((records, skipped))
}

fn opt_count(v: Option<&Value>) -> std::result::Result<Option<u64>, ()> {
    match v {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => n.as_u64().map(Some).ok_or(()),
        Some(Value::String(s)) => s.trim().parse().map(Some).map_err(|_| ()),
        _ => Err(()),
    }
}

fn opt_text(v: Option<&Value>) -> std::result::Result<String, ()> {
    match v {
        None | Some(Value::Null) => Ok(String::new()),
        Some(Value::String(s)) => Ok(s.clone()),
        _ => Err(()),
    }
}

fn parse_profile(line: &str) -> Option<RawProfile> {
    let v: Value = serde_json::from_str(line).ok()?;
    let obj = v.as_object()?;
    let user = json_string(obj.get("user")?).filter(|s| !s.is_empty())?;
    Some(RawProfile {
        user_id: UserId(user),
        location: opt_text(obj.get("location")).ok()?,
        description: opt_text(obj.get("description")).ok()?,
        posts: opt_count(obj.get("posts")).ok()?,
        mentions_received: opt_count(obj.get("mentions_received")).ok()?,
        retweets_received: opt_count(obj.get("retweets_received")).ok()?,
    })
}

fn read_profiles(path: &Path) -> Result<(Vec<RawProfile>, usize)> {
    let text = read_to_string(path)?;
    let mut profiles = Vec::new();
    let mut seen = BTreeSet::new();
    let mut skipped = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match parse_profile(line) {
            Some(p) => {
                if !seen.insert(p.user_id.clone()) {
                    return Err(Error::DuplicateUser(p.user_id.0));
                }
                profiles.push(p);
            }
            None => skipped += 1,
        }
    }
    Ok((profiles, skipped))
}

fn read_followers(path: &Path) -> Result<(BTreeSet<FollowerEdge>, usize, usize)> {
    let text = read_to_string(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.len() != 2 || &headers[0] != "follower" || &headers[1] != "followee" {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            expected: "follower,followee".into(),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut edges = BTreeSet::new();
    let mut skipped = 0;
    let mut duplicates = 0;
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        if row.len() != 2 || row[0].is_empty() || row[1].is_empty() || row[0] == row[1] {
            skipped += 1;
            continue;
        }
        if !edges.insert(FollowerEdge::new(&row[0], &row[1])) {
            duplicates += 1;
        }
    }
    Ok((edges, skipped, duplicates))
}
