//! Feature/sustainability correlation tables, hypothesis sign checks and the
//! exact one-sided binomial comparison of reciprocal against undirected
//! cohesion.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::cohesion::{CohesionStats, GroupCohesion, Mode};
use crate::identity::{GroupIdentity, IdentityKind};
use crate::io_util::fmt_opt;
use crate::sustainability::{Measure, SustainabilitySummary};

/// Absolute correlation above which a cell is highlighted.
pub const HIGHLIGHT_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CohesionStat {
    Density,
    Transitivity,
    AvgClustering,
    AvgShortestPath,
}

impl CohesionStat {
    pub const ALL: [CohesionStat; 4] = [
        CohesionStat::Density,
        CohesionStat::Transitivity,
        CohesionStat::AvgClustering,
        CohesionStat::AvgShortestPath,
    ];

    fn key(self) -> &'static str {
        match self {
            CohesionStat::Density => "density",
            CohesionStat::Transitivity => "transitivity",
            CohesionStat::AvgClustering => "avg_clustering",
            CohesionStat::AvgShortestPath => "avg_shortest_path",
        }
    }

    fn label(self) -> &'static str {
        match self {
            CohesionStat::Density => "Density",
            CohesionStat::Transitivity => "Transitivity",
            CohesionStat::AvgClustering => "Avg. Clustering Coef.",
            CohesionStat::AvgShortestPath => "Avg. Shortest Path Length",
        }
    }

    fn of(self, s: &CohesionStats) -> Option<f64> {
        match self {
            CohesionStat::Density => s.density,
            CohesionStat::Transitivity => s.transitivity,
            CohesionStat::AvgClustering => s.avg_clustering,
            CohesionStat::AvgShortestPath => s.avg_shortest_path,
        }
    }
}

/// One of the thirteen group features: ten cohesion statistics (two
/// directed, four reciprocal, four undirected) and three identity entropies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    Cohesion(Mode, CohesionStat),
    Identity(IdentityKind),
}

impl Feature {
    pub const ALL: [Feature; 13] = [
        Feature::Cohesion(Mode::Directed, CohesionStat::Density),
        Feature::Cohesion(Mode::Directed, CohesionStat::Transitivity),
        Feature::Cohesion(Mode::Reciprocal, CohesionStat::Density),
        Feature::Cohesion(Mode::Reciprocal, CohesionStat::Transitivity),
        Feature::Cohesion(Mode::Reciprocal, CohesionStat::AvgClustering),
        Feature::Cohesion(Mode::Reciprocal, CohesionStat::AvgShortestPath),
        Feature::Cohesion(Mode::Undirected, CohesionStat::Density),
        Feature::Cohesion(Mode::Undirected, CohesionStat::Transitivity),
        Feature::Cohesion(Mode::Undirected, CohesionStat::AvgClustering),
        Feature::Cohesion(Mode::Undirected, CohesionStat::AvgShortestPath),
        Feature::Identity(IdentityKind::Regional),
        Feature::Identity(IdentityKind::Expertise),
        Feature::Identity(IdentityKind::Aid),
    ];

    /// Column key, e.g. `reciprocal_avg_clustering` or `aid_entropy`.
    pub fn key(self) -> String {
        match self {
            Feature::Cohesion(mode, stat) => format!("{}_{}", mode.name(), stat.key()),
            Feature::Identity(kind) => identity_key(kind).to_string(),
        }
    }

    /// Row label, e.g. `Reciprocal / Avg. Clustering Coef.`.
    pub fn label(self) -> String {
        match self {
            Feature::Cohesion(mode, stat) => {
                let m = match mode {
                    Mode::Directed => "Directed",
                    Mode::Reciprocal => "Reciprocal",
                    Mode::Undirected => "Undirected",
                };
                format!("{m} / {}", stat.label())
            }
            Feature::Identity(IdentityKind::Regional) => "Identity / Regional Entropy".into(),
            Feature::Identity(IdentityKind::Expertise) => "Identity / Expertise Entropy".into(),
            Feature::Identity(IdentityKind::Aid) => "Identity / AID Entropy".into(),
        }
    }

    pub fn from_key(key: &str) -> Option<Feature> {
        Feature::ALL.into_iter().find(|f| f.key() == key)
    }
}

fn identity_key(kind: IdentityKind) -> &'static str {
    match kind {
        IdentityKind::Regional => "regional_entropy",
        IdentityKind::Expertise => "expertise_entropy",
        IdentityKind::Aid => "aid_entropy",
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupFeatures {
    pub group_id: usize,
    pub cohesion: GroupCohesion,
    pub identity: GroupIdentity,
}

impl GroupFeatures {
    pub fn get(&self, f: Feature) -> Option<f64> {
        match f {
            Feature::Cohesion(mode, stat) => stat.of(self.cohesion.mode(mode)),
            Feature::Identity(kind) => self.identity.get(kind),
        }
    }
}

/// Sample Pearson correlation. `None` with fewer than three pairs, unequal
/// lengths, non-finite input or zero variance on either side.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return None;
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Exact `P(X >= k)` for `X ~ Binomial(n, 1/2)`, summed over exact integer
/// binomial coefficients. Returns 0 for `k > n`.
pub fn binomial_one_sided(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    // C(n, i) for i = k..=n, built from C(n, k) by the ratio recurrence
    let mut coeff = BigUint::one();
    for i in 0..k {
        coeff = coeff * (n - i) / (i + 1);
    }
    let mut tail = BigUint::zero();
    for i in k..=n {
        tail += &coeff;
        if i < n {
            coeff = coeff * (n - i) / (i + 1);
        }
    }
    ratio_to_power_of_two(&tail, n)
}

/// `value / 2^exp` as f64 without overflowing intermediate floats.
fn ratio_to_power_of_two(value: &BigUint, exp: u64) -> f64 {
    let bits = value.bits();
    let shift = bits.saturating_sub(64);
    let top = (value >> shift).to_u64().expect("fits in 64 bits") as f64;
    let e = shift as i64 - exp as i64;
    // split the scaling so neither factor underflows prematurely
    let half = (e / 2).clamp(-1074, 1023) as i32;
    let rest = (e - half as i64).clamp(-1074, 1023) as i32;
    top * 2f64.powi(half) * 2f64.powi(rest)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialTestResult {
    pub n: u64,
    pub k: u64,
    pub p_value: f64,
}

impl BinomialTestResult {
    pub fn new(n: u64, k: u64) -> Self {
        BinomialTestResult {
            n,
            k,
            p_value: binomial_one_sided(n, k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CorrelationCell {
    pub r: Option<f64>,
    /// Groups contributing to the cell.
    pub n: usize,
}

impl CorrelationCell {
    pub fn highlighted(&self) -> bool {
        self.r.is_some_and(|r| r.abs() > HIGHLIGHT_THRESHOLD)
    }
}

/// Feature x measure Pearson correlations for one dataset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrelationTable {
    pub dataset: String,
    cells: BTreeMap<(Feature, Measure), CorrelationCell>,
}

impl CorrelationTable {
    /// Correlates every feature with every measure's over-time mean, joining
    /// groups by id and dropping missing values pairwise per cell.
    pub fn compute(dataset: &str, features: &[GroupFeatures], sustainability: &[SustainabilitySummary]) -> Self {
        let by_id: BTreeMap<usize, &SustainabilitySummary> = sustainability.iter().map(|s| (s.group_id, s)).collect();
        let mut cells = BTreeMap::new();
        for f in Feature::ALL {
            for m in Measure::ALL {
                let (xs, ys): (Vec<f64>, Vec<f64>) = features
                    .iter()
                    .filter_map(|g| Some((g.get(f)?, by_id.get(&g.group_id)?.get(m)?)))
                    .unzip();
                cells.insert(
                    (f, m),
                    CorrelationCell {
                        r: pearson(&xs, &ys),
                        n: xs.len(),
                    },
                );
            }
        }
        CorrelationTable {
            dataset: dataset.to_owned(),
            cells,
        }
    }

    /// Table from known coefficients; unspecified cells are missing.
    pub fn from_values(dataset: &str, values: impl IntoIterator<Item = (Feature, Measure, f64)>) -> Self {
        let mut cells: BTreeMap<(Feature, Measure), CorrelationCell> = Feature::ALL
            .into_iter()
            .flat_map(|f| Measure::ALL.into_iter().map(move |m| ((f, m), CorrelationCell::default())))
            .collect();
        for (f, m, r) in values {
            cells.insert((f, m), CorrelationCell { r: Some(r), n: 0 });
        }
        CorrelationTable {
            dataset: dataset.to_owned(),
            cells,
        }
    }

    pub fn cell(&self, f: Feature, m: Measure) -> CorrelationCell {
        self.cells.get(&(f, m)).copied().unwrap_or_default()
    }

    pub fn r(&self, f: Feature, m: Measure) -> Option<f64> {
        self.cell(f, m).r
    }

    /// `feature,topic_divergence,membership_stability,growth_rate`, one row
    /// per feature in canonical order; coefficients rounded to 6 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature");
        for m in Measure::ALL {
            let _ = write!(out, ",{}", m.label());
        }
        out.push('\n');
        for f in Feature::ALL {
            out.push_str(&f.key());
            for m in Measure::ALL {
                let r = self.r(f, m).map(|r| (r * 1e6).round() / 1e6);
                let _ = write!(out, ",{}", fmt_opt(r));
            }
            out.push('\n');
        }
        out
    }

    /// Same layout as [`CorrelationTable::to_csv`] with group counts.
    pub fn counts_csv(&self) -> String {
        let mut out = String::from("feature");
        for m in Measure::ALL {
            let _ = write!(out, ",{}", m.label());
        }
        out.push('\n');
        for f in Feature::ALL {
            out.push_str(&f.key());
            for m in Measure::ALL {
                let _ = write!(out, ",{}", self.cell(f, m).n);
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`CorrelationTable::to_csv`] output (counts are not restored).
    pub fn parse_csv(dataset: &str, text: &str) -> crate::Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().unwrap_or("").trim();
        let expected = format!(
            "feature,{}",
            Measure::ALL.map(Measure::label).join(",")
        );
        if header != expected {
            return Err(crate::Error::MalformedHeader {
                path: "<correlations>".into(),
                expected,
                found: header.into(),
            });
        }
        let mut values = Vec::new();
        for line in lines {
            let bad = || crate::Error::invalid("correlation row", line);
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 1 + Measure::ALL.len() {
                return Err(bad());
            }
            let f = Feature::from_key(cells[0].trim()).ok_or_else(bad)?;
            for (m, cell) in Measure::ALL.into_iter().zip(&cells[1..]) {
                if let Some(r) = crate::io_util::parse_opt(cell).map_err(|_| bad())? {
                    values.push((f, m, r));
                }
            }
        }
        Ok(CorrelationTable::from_values(dataset, values))
    }
}

fn compare_modes(tables: &[CorrelationTable], stronger: Mode, weaker: Mode) -> BinomialTestResult {
    let (mut n, mut k) = (0u64, 0u64);
    for table in tables {
        for stat in CohesionStat::ALL {
            let a = table.r(Feature::Cohesion(stronger, stat), Measure::TopicDivergence);
            let b = table.r(Feature::Cohesion(weaker, stat), Measure::TopicDivergence);
            if let (Some(a), Some(b)) = (a, b) {
                n += 1;
                // ties count as failures
                k += (a.abs() > b.abs()) as u64;
            }
        }
    }
    BinomialTestResult::new(n, k)
}

/// Over every (statistic, dataset) pair with both topic-divergence
/// coefficients defined, counts how often the reciprocal coefficient is
/// strictly larger in absolute value, and tests that count against a fair coin.
pub fn reciprocal_vs_undirected_test(tables: &[CorrelationTable]) -> BinomialTestResult {
    compare_modes(tables, Mode::Reciprocal, Mode::Undirected)
}

/// The opposite direction of [`reciprocal_vs_undirected_test`].
pub fn undirected_vs_reciprocal_test(tables: &[CorrelationTable]) -> BinomialTestResult {
    compare_modes(tables, Mode::Undirected, Mode::Reciprocal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Positive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck {
    /// 1: denser, tighter groups diverge less. 2: identity-homogeneous groups diverge less.
    pub hypothesis: u8,
    pub feature: Feature,
    pub expected: Sign,
    pub r: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetChecks {
    pub dataset: String,
    pub checks: Vec<HypothesisCheck>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub datasets: Vec<DatasetChecks>,
    pub reciprocal_stronger: BinomialTestResult,
    pub undirected_stronger: BinomialTestResult,
}

fn expected_signs() -> Vec<(u8, Feature, Sign)> {
    let mut out: Vec<(u8, Feature, Sign)> = Mode::ALL
        .into_iter()
        .map(|m| (1, Feature::Cohesion(m, CohesionStat::Density), Sign::Negative))
        .collect();
    for m in [Mode::Reciprocal, Mode::Undirected] {
        out.push((1, Feature::Cohesion(m, CohesionStat::AvgShortestPath), Sign::Positive));
    }
    for kind in IdentityKind::ALL {
        out.push((2, Feature::Identity(kind), Sign::Positive));
    }
    out
}

/// Sign checks on the topic-divergence column of each table: density
/// negative and average shortest path positive (hypothesis 1), every identity
/// entropy positive (hypothesis 2). Signs must be strict; missing fails.
pub fn hypothesis_report(tables: &[CorrelationTable]) -> HypothesisReport {
    let datasets = tables
        .iter()
        .map(|t| DatasetChecks {
            dataset: t.dataset.clone(),
            checks: expected_signs()
                .into_iter()
                .map(|(hypothesis, feature, expected)| {
                    let r = t.r(feature, Measure::TopicDivergence);
                    let passed = r.is_some_and(|r| match expected {
                        Sign::Negative => r < 0.0,
                        Sign::Positive => r > 0.0,
                    });
                    HypothesisCheck {
                        hypothesis,
                        feature,
                        expected,
                        r,
                        passed,
                    }
                })
                .collect(),
        })
        .collect();
    HypothesisReport {
        datasets,
        reciprocal_stronger: reciprocal_vs_undirected_test(tables),
        undirected_stronger: undirected_vs_reciprocal_test(tables),
    }
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.datasets {
            writeln!(f, "dataset: {}", d.dataset)?;
            for c in &d.checks {
                let sign = match c.expected {
                    Sign::Negative => "< 0",
                    Sign::Positive => "> 0",
                };
                let r = c.r.map_or_else(|| "NA".to_string(), |r| format!("{r:+.4}"));
                writeln!(
                    f,
                    "  H{} {:<40} r = {:>8}  expected {}  {}",
                    c.hypothesis,
                    c.feature.label(),
                    r,
                    sign,
                    if c.passed { "PASS" } else { "FAIL" }
                )?;
            }
        }
        let b = &self.reciprocal_stronger;
        writeln!(
            f,
            "reciprocal |r| > undirected |r|: {} of {} (one-sided binomial p = {:.4})",
            b.k, b.n, b.p_value
        )?;
        let b = &self.undirected_stronger;
        writeln!(
            f,
            "undirected |r| > reciprocal |r|: {} of {} (one-sided binomial p = {:.4})",
            b.k, b.n, b.p_value
        )
    }
}
