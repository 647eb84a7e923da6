//! Identity classes (regional, expertise, activity/popularity/diffusion) and
//! per-group identity entropy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{Corpus, UserId, UserProfile};
use crate::error::{Error, Result};
use crate::io_util::read_to_string;

pub(crate) const BUNDLED_GAZETTEER: &str = include_str!("../data/gazetteer.tsv");
pub(crate) const BUNDLED_EXPERTISE: &str = include_str!("../data/expertise.tsv");

/// Lowercase words joined by single spaces; punctuation is a separator.
fn normalize(text: &str) -> String {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Rows of a TSV resource, skipping blank and `#` comment lines.
fn tsv_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| (i + 1, l.split('\t').map(str::trim).collect()))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Region {
    pub country: String,
    pub state: Option<String>,
}

/// Offline location resolver: normalized location pattern -> region.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: BTreeMap<String, Region>,
}

impl Gazetteer {
    /// TSV `pattern<TAB>country<TAB>state(optional)`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (line, cells) in tsv_rows(text) {
            let (pattern, country, state) = match cells[..] {
                [p, c] => (p, c, None),
                [p, c, s] => (p, c, Some(s).filter(|s| !s.is_empty())),
                _ => return Err(Error::invalid("gazetteer row", format!("line {line}"))),
            };
            let pattern = normalize(pattern);
            if pattern.is_empty() || country.is_empty() {
                return Err(Error::invalid("gazetteer row", format!("line {line}")));
            }
            entries.insert(
                pattern,
                Region {
                    country: country.to_uppercase(),
                    state: state.map(str::to_uppercase),
                },
            );
        }
        Ok(Gazetteer { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Gazetteer::parse(&read_to_string(path)?)
    }

    /// Small built-in gazetteer covering a handful of US states and countries.
    pub fn bundled() -> Self {
        Gazetteer::parse(BUNDLED_GAZETTEER).expect("bundled gazetteer parses")
    }

    /// Case- and punctuation-insensitive lookup: the whole location first,
    /// then each comma-separated part from left to right.
    pub fn resolve(&self, location: &str) -> Option<&Region> {
        let whole = normalize(location);
        if whole.is_empty() {
            return None;
        }
        self.entries.get(&whole).or_else(|| {
            location
                .split(',')
                .map(normalize)
                .filter(|p| !p.is_empty())
                .find_map(|p| self.entries.get(&p))
        })
    }
}

/// Regional class: `NATION-STATE` inside the event nation (or `NATION` when
/// no state resolves), the country code elsewhere, `None` when unresolved.
pub fn regional_identity(profile: &UserProfile, event_nation: &str, gazetteer: &Gazetteer) -> Option<String> {
    let region = gazetteer.resolve(&profile.location)?;
    if region.country.eq_ignore_ascii_case(event_nation) {
        Some(match &region.state {
            Some(s) => format!("{}-{}", region.country, s),
            None => region.country.clone(),
        })
    } else {
        Some(region.country.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExpertiseClass {
    Academics,
    Business,
    Politics,
    Technology,
    Blogging,
    Journalism,
    Art,
    Sports,
    Medical,
    Others,
}

impl ExpertiseClass {
    pub const ALL: [ExpertiseClass; 10] = [
        ExpertiseClass::Academics,
        ExpertiseClass::Business,
        ExpertiseClass::Politics,
        ExpertiseClass::Technology,
        ExpertiseClass::Blogging,
        ExpertiseClass::Journalism,
        ExpertiseClass::Art,
        ExpertiseClass::Sports,
        ExpertiseClass::Medical,
        ExpertiseClass::Others,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExpertiseClass::Academics => "ACADEMICS",
            ExpertiseClass::Business => "BUSINESS",
            ExpertiseClass::Politics => "POLITICS",
            ExpertiseClass::Technology => "TECHNOLOGY",
            ExpertiseClass::Blogging => "BLOGGING",
            ExpertiseClass::Journalism => "JOURNALISM",
            ExpertiseClass::Art => "ART",
            ExpertiseClass::Sports => "SPORTS",
            ExpertiseClass::Medical => "MEDICAL",
            ExpertiseClass::Others => "OTHERS",
        }
    }
}

impl fmt::Display for ExpertiseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExpertiseClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExpertiseClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid("expertise class", s))
    }
}

/// Keyword/phrase -> class map; earlier entries win.
#[derive(Debug, Clone, Default)]
pub struct ExpertiseLexicon {
    entries: Vec<(Vec<String>, ExpertiseClass)>,
}

impl ExpertiseLexicon {
    /// TSV `keyword_or_phrase<TAB>CLASS`; file order is priority order.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (line, cells) in tsv_rows(text) {
            let [phrase, class] = cells[..] else {
                return Err(Error::invalid("expertise lexicon row", format!("line {line}")));
            };
            let words: Vec<String> = normalize(phrase).split(' ').filter(|w| !w.is_empty()).map(String::from).collect();
            if words.is_empty() {
                return Err(Error::invalid("expertise lexicon row", format!("line {line}")));
            }
            entries.push((words, class.parse()?));
        }
        Ok(ExpertiseLexicon { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        ExpertiseLexicon::parse(&read_to_string(path)?)
    }

    pub fn bundled() -> Self {
        ExpertiseLexicon::parse(BUNDLED_EXPERTISE).expect("bundled lexicon parses")
    }

    pub fn classify(&self, description: &str) -> ExpertiseClass {
        let normalized = normalize(description);
        let words: Vec<&str> = normalized.split(' ').filter(|w| !w.is_empty()).collect();
        self.entries
            .iter()
            .find(|(phrase, _)| {
                words
                    .windows(phrase.len())
                    .any(|w| w.iter().zip(phrase).all(|(a, b)| *a == b))
            })
            .map_or(ExpertiseClass::Others, |&(_, class)| class)
    }
}

pub fn expertise_identity(profile: &UserProfile, lexicon: &ExpertiseLexicon) -> ExpertiseClass {
    lexicon.classify(&profile.description)
}

fn median(mut values: Vec<u64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_unstable();
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid] as f64
    } else {
        (values[mid - 1] as f64 + values[mid] as f64) / 2.0
    }
}

/// Medians of the three action metrics over a whole community.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AidThresholds {
    pub posts: f64,
    pub mentions: f64,
    pub retweets: f64,
}

impl AidThresholds {
    pub fn from_profiles<'a>(profiles: impl IntoIterator<Item = &'a UserProfile>) -> Self {
        let (mut p, mut m, mut r) = (Vec::new(), Vec::new(), Vec::new());
        for prof in profiles {
            p.push(prof.post_count);
            m.push(prof.mention_count);
            r.push(prof.retweeted_count);
        }
        AidThresholds {
            posts: median(p),
            mentions: median(m),
            retweets: median(r),
        }
    }

    pub fn from_corpus(corpus: &Corpus) -> Self {
        AidThresholds::from_profiles(corpus.profiles())
    }
}

/// One of the eight high/low combinations of activity, popularity and
/// diffusion strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AidClass {
    pub activity_high: bool,
    pub popularity_high: bool,
    pub diffusion_high: bool,
}

impl AidClass {
    pub fn index(self) -> usize {
        (self.activity_high as usize) << 2 | (self.popularity_high as usize) << 1 | self.diffusion_high as usize
    }

    pub fn from_index(i: usize) -> Self {
        AidClass {
            activity_high: i & 4 != 0,
            popularity_high: i & 2 != 0,
            diffusion_high: i & 1 != 0,
        }
    }

    pub fn all() -> impl Iterator<Item = AidClass> {
        (0..8).map(AidClass::from_index)
    }
}

impl fmt::Display for AidClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hl = |b: bool| if b { 'H' } else { 'L' };
        write!(f, "{}{}{}", hl(self.activity_high), hl(self.popularity_high), hl(self.diffusion_high))
    }
}

/// A metric at or above its median counts as high.
pub fn aid_identity(profile: &UserProfile, thresholds: &AidThresholds) -> AidClass {
    AidClass {
        activity_high: profile.post_count as f64 >= thresholds.posts,
        popularity_high: profile.mention_count as f64 >= thresholds.mentions,
        diffusion_high: profile.retweeted_count as f64 >= thresholds.retweets,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityLabel {
    /// `None` for an unresolvable location.
    pub regional: Option<String>,
    pub expertise: ExpertiseClass,
    pub aid: AidClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IdentityKind {
    Regional,
    Expertise,
    Aid,
}

impl IdentityKind {
    pub const ALL: [IdentityKind; 3] = [IdentityKind::Regional, IdentityKind::Expertise, IdentityKind::Aid];
}

/// Everything needed to label a user.
#[derive(Debug, Clone)]
pub struct IdentityLabeler {
    pub gazetteer: Gazetteer,
    pub lexicon: ExpertiseLexicon,
    pub thresholds: AidThresholds,
    pub event_nation: String,
}

impl IdentityLabeler {
    pub fn for_corpus(corpus: &Corpus, gazetteer: Gazetteer, lexicon: ExpertiseLexicon, event_nation: &str) -> Self {
        IdentityLabeler {
            gazetteer,
            lexicon,
            thresholds: AidThresholds::from_corpus(corpus),
            event_nation: event_nation.to_owned(),
        }
    }

    pub fn label(&self, profile: &UserProfile) -> IdentityLabel {
        IdentityLabel {
            regional: regional_identity(profile, &self.event_nation, &self.gazetteer),
            expertise: expertise_identity(profile, &self.lexicon),
            aid: aid_identity(profile, &self.thresholds),
        }
    }
}

/// Shannon entropy (natural log) of the empirical class distribution;
/// `None` for an empty input.
pub fn entropy<T: Ord>(labels: impl IntoIterator<Item = T>) -> Option<f64> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    let mut n = 0usize;
    for l in labels {
        *counts.entry(l).or_default() += 1;
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let n = n as f64;
    let h: f64 = counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    Some(h.max(0.0))
}

/// Entropy of one identity type over a group's static members. Users with an
/// unresolved regional class are left out; if none remain the result is `None`.
pub fn group_entropy(members: &BTreeSet<UserId>, corpus: &Corpus, labeler: &IdentityLabeler, kind: IdentityKind) -> Option<f64> {
    let profiles: Vec<UserProfile> = members
        .iter()
        .map(|u| corpus.profile(u).cloned().unwrap_or_else(|| UserProfile::empty(u.clone())))
        .collect();
    match kind {
        IdentityKind::Regional => entropy(
            profiles
                .iter()
                .filter_map(|p| regional_identity(p, &labeler.event_nation, &labeler.gazetteer)),
        ),
        IdentityKind::Expertise => entropy(profiles.iter().map(|p| expertise_identity(p, &labeler.lexicon))),
        IdentityKind::Aid => entropy(profiles.iter().map(|p| aid_identity(p, &labeler.thresholds))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupIdentity {
    pub regional_entropy: Option<f64>,
    pub expertise_entropy: Option<f64>,
    pub aid_entropy: Option<f64>,
}

impl GroupIdentity {
    pub fn compute(members: &BTreeSet<UserId>, corpus: &Corpus, labeler: &IdentityLabeler) -> Self {
        GroupIdentity {
            regional_entropy: group_entropy(members, corpus, labeler, IdentityKind::Regional),
            expertise_entropy: group_entropy(members, corpus, labeler, IdentityKind::Expertise),
            aid_entropy: group_entropy(members, corpus, labeler, IdentityKind::Aid),
        }
    }

    pub fn get(&self, kind: IdentityKind) -> Option<f64> {
        match kind {
            IdentityKind::Regional => self.regional_entropy,
            IdentityKind::Expertise => self.expertise_entropy,
            IdentityKind::Aid => self.aid_entropy,
        }
    }
}
