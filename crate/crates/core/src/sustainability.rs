//! Sustainability measures over a group's snapshot sequence: topic
//! divergence, membership stability and growth rate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::UserId;
use crate::error::{Error, Result};
use crate::grouping::SocialGroup;
use crate::io_util::{fmt_opt, parse_opt, read_to_string};
use crate::topics::{group_topic_divergence, TopicTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Measure {
    TopicDivergence,
    MembershipStability,
    GrowthRate,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::TopicDivergence, Measure::MembershipStability, Measure::GrowthRate];

    pub fn code(self) -> &'static str {
        match self {
            Measure::TopicDivergence => "TD",
            Measure::MembershipStability => "MS",
            Measure::GrowthRate => "GR",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Measure::TopicDivergence => "topic_divergence",
            Measure::MembershipStability => "membership_stability",
            Measure::GrowthRate => "growth_rate",
        }
    }

    fn from_code(s: &str) -> Option<Measure> {
        Measure::ALL.into_iter().find(|m| m.code() == s)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// `|g_t| / (|g_{t-1} △ g_t| + 1)`; `None` when `g_t` is empty.
pub fn membership_stability(prev: &BTreeSet<UserId>, current: &BTreeSet<UserId>) -> Option<f64> {
    if current.is_empty() {
        return None;
    }
    let changed = prev.symmetric_difference(current).count();
    Some(current.len() as f64 / (changed as f64 + 1.0))
}

/// `|g_t| / |g_{t-1}|`; `None` when `g_{t-1}` is empty.
pub fn growth_rate(prev: &BTreeSet<UserId>, current: &BTreeSet<UserId>) -> Option<f64> {
    if prev.is_empty() {
        return None;
    }
    Some(current.len() as f64 / prev.len() as f64)
}

/// Per-slice measures of one group and their means over defined slices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SustainabilitySeries {
    pub group_id: usize,
    pub td: BTreeMap<usize, f64>,
    pub ms: BTreeMap<usize, f64>,
    pub gr: BTreeMap<usize, f64>,
}

fn mean(values: &BTreeMap<usize, f64>) -> Option<f64> {
    (!values.is_empty()).then(|| values.values().sum::<f64>() / values.len() as f64)
}

pub(crate) fn std_dev(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() as f64 - 1.0);
    Some(var.sqrt())
}

impl SustainabilitySeries {
    pub fn values(&self, m: Measure) -> &BTreeMap<usize, f64> {
        match m {
            Measure::TopicDivergence => &self.td,
            Measure::MembershipStability => &self.ms,
            Measure::GrowthRate => &self.gr,
        }
    }

    fn values_mut(&mut self, m: Measure) -> &mut BTreeMap<usize, f64> {
        match m {
            Measure::TopicDivergence => &mut self.td,
            Measure::MembershipStability => &mut self.ms,
            Measure::GrowthRate => &mut self.gr,
        }
    }

    pub fn mean(&self, m: Measure) -> Option<f64> {
        mean(self.values(m))
    }

    pub fn mean_td(&self) -> Option<f64> {
        self.mean(Measure::TopicDivergence)
    }

    pub fn mean_ms(&self) -> Option<f64> {
        self.mean(Measure::MembershipStability)
    }

    pub fn mean_gr(&self) -> Option<f64> {
        self.mean(Measure::GrowthRate)
    }
}

/// Builds the series for one group across slices `0..num_slices`.
///
/// All three measures are evaluated only at slices with a nonempty `g_t`.
/// TD uses the members that have a topic distribution at `t`. MS and GR start
/// after the group's first active slice, and GR also needs a nonempty
/// `g_{t-1}`, so every recorded MS and GR value is positive.
pub fn series(group: &SocialGroup, num_slices: usize, topics: &TopicTable, eps: f64) -> SustainabilitySeries {
    let mut out = SustainabilitySeries {
        group_id: group.group_id,
        ..Default::default()
    };
    let empty = BTreeSet::new();
    let first_active = group.snapshots().keys().next().copied();
    for t in 0..num_slices {
        let current = group.snapshot_ref(t).unwrap_or(&empty);
        if !current.is_empty() {
            if let Some(td) = group_topic_divergence(current, t, topics, eps) {
                out.td.insert(t, td);
            }
        }
        if !current.is_empty() && first_active.is_some_and(|f| t > f) {
            let prev = group.snapshot_ref(t - 1).unwrap_or(&empty);
            if let Some(ms) = membership_stability(prev, current) {
                out.ms.insert(t, ms);
            }
            if let Some(gr) = growth_rate(prev, current) {
                out.gr.insert(t, gr);
            }
        }
    }
    out
}

/// Long format `group_id,slice,measure,value`.
pub fn series_csv(all: &[SustainabilitySeries]) -> String {
    let mut out = String::from("group_id,slice,measure,value\n");
    for s in all {
        for m in Measure::ALL {
            for (t, v) in s.values(m) {
                let _ = writeln!(out, "{},{},{},{}", s.group_id, t, m.code(), v);
            }
        }
    }
    out
}

pub fn parse_series_csv(text: &str) -> Result<Vec<SustainabilitySeries>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().unwrap_or("").trim();
    if header != "group_id,slice,measure,value" {
        return Err(Error::MalformedHeader {
            path: "<sustainability series>".into(),
            expected: "group_id,slice,measure,value".into(),
            found: header.into(),
        });
    }
    let mut by_group: BTreeMap<usize, SustainabilitySeries> = BTreeMap::new();
    for line in lines {
        let bad = || Error::invalid("sustainability row", line);
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let [gid, t, m, v] = cells[..] else {
            return Err(bad());
        };
        let gid: usize = gid.parse().map_err(|_| bad())?;
        let t: usize = t.parse().map_err(|_| bad())?;
        let m = Measure::from_code(m).ok_or_else(bad)?;
        let v: f64 = v.parse().map_err(|_| bad())?;
        let s = by_group.entry(gid).or_insert_with(|| SustainabilitySeries {
            group_id: gid,
            ..Default::default()
        });
        s.values_mut(m).insert(t, v);
    }
    Ok(by_group.into_values().collect())
}

/// Over-time means of one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SustainabilitySummary {
    pub group_id: usize,
    pub mean_td: Option<f64>,
    pub mean_ms: Option<f64>,
    pub mean_gr: Option<f64>,
}

impl SustainabilitySummary {
    pub fn of(s: &SustainabilitySeries) -> Self {
        SustainabilitySummary {
            group_id: s.group_id,
            mean_td: s.mean_td(),
            mean_ms: s.mean_ms(),
            mean_gr: s.mean_gr(),
        }
    }

    pub fn get(&self, m: Measure) -> Option<f64> {
        match m {
            Measure::TopicDivergence => self.mean_td,
            Measure::MembershipStability => self.mean_ms,
            Measure::GrowthRate => self.mean_gr,
        }
    }
}

/// `group_id,mean_TD,mean_MS,mean_GR`; undefined means are empty cells.
pub fn summary_csv(all: &[SustainabilitySeries]) -> String {
    let mut out = String::from("group_id,mean_TD,mean_MS,mean_GR\n");
    for s in all {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.group_id,
            fmt_opt(s.mean_td()),
            fmt_opt(s.mean_ms()),
            fmt_opt(s.mean_gr())
        );
    }
    out
}

pub fn read_summary(path: &Path) -> Result<Vec<SustainabilitySummary>> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().unwrap_or("").trim();
    if header != "group_id,mean_TD,mean_MS,mean_GR" {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            expected: "group_id,mean_TD,mean_MS,mean_GR".into(),
            found: header.into(),
        });
    }
    lines
        .map(|line| {
            let bad = || Error::invalid("sustainability summary row", line);
            let cells: Vec<&str> = line.split(',').collect();
            let [gid, td, ms, gr] = cells[..] else {
                return Err(bad());
            };
            Ok(SustainabilitySummary {
                group_id: gid.trim().parse().map_err(|_| bad())?,
                mean_td: parse_opt(td).map_err(|_| bad())?,
                mean_ms: parse_opt(ms).map_err(|_| bad())?,
                mean_gr: parse_opt(gr).map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Mean and sample standard deviation, across groups, of each group's
/// over-time mean.
pub fn across_groups(summaries: &[SustainabilitySummary], m: Measure) -> (Option<f64>, Option<f64>) {
    let vals: Vec<f64> = summaries.iter().filter_map(|s| s.get(m)).collect();
    let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
    (mean, std_dev(&vals))
}
