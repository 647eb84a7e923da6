//! Stage runner over on-disk artifacts.
//!
//! Every stage reads its inputs from earlier stages' directories under the
//! configured output directory and writes its own directory atomically, so
//! stages can be re-run independently and in any order their prerequisites
//! allow.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use rayon::prelude::*;

use crate::cohesion::{FollowerIndex, GroupCohesion};
use crate::config::PipelineConfig;
use crate::corpus::{Corpus, CorpusConfig, Vocabulary};
use crate::error::{Error, Result};
use crate::grouping::{self, filter_groups, read_groups, SocialGroup};
use crate::identity::{ExpertiseLexicon, Gazetteer, GroupIdentity, IdentityKind, IdentityLabeler};
use crate::inference::{hypothesis_report, CorrelationTable, Feature, GroupFeatures, HIGHLIGHT_THRESHOLD};
use crate::io_util::{fmt_opt, parse_opt, read_to_string, write_atomic};
use crate::sustainability::{self, across_groups, read_summary, std_dev, Measure};
use crate::topics::{fit_topics, load_topics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Cluster,
    Cohesion,
    Identity,
    Topics,
    Sustainability,
    Correlate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Cluster,
        Stage::Cohesion,
        Stage::Identity,
        Stage::Topics,
        Stage::Sustainability,
        Stage::Correlate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Cluster => "cluster",
            Stage::Cohesion => "cohesion",
            Stage::Identity => "identity",
            Stage::Topics => "topics",
            Stage::Sustainability => "sustainability",
            Stage::Correlate => "correlate",
            Stage::Report => "report",
        }
    }

    /// Direct prerequisites.
    pub fn requires(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Cluster => &[Stage::Ingest],
            Stage::Cohesion | Stage::Identity => &[Stage::Ingest, Stage::Cluster],
            Stage::Topics => &[Stage::Ingest],
            Stage::Sustainability => &[Stage::Ingest, Stage::Cluster, Stage::Topics],
            Stage::Correlate => &[Stage::Cohesion, Stage::Identity, Stage::Sustainability],
            Stage::Report => &[Stage::Cohesion, Stage::Identity, Stage::Sustainability, Stage::Correlate],
        }
    }

    /// Every stage this one depends on, directly or not, in pipeline order.
    pub fn transitive_requirements(self) -> Vec<Stage> {
        let mut seen = [false; 8];
        let mut stack = self.requires().to_vec();
        while let Some(s) = stack.pop() {
            if !seen[s as usize] {
                seen[s as usize] = true;
                stack.extend_from_slice(s.requires());
            }
        }
        Stage::ALL.into_iter().filter(|s| seen[*s as usize]).collect()
    }

    /// The file whose presence marks the stage as complete.
    fn marker(self) -> &'static str {
        match self {
            Stage::Ingest => "posts.jsonl",
            Stage::Cluster => "snapshots.csv",
            Stage::Cohesion => "cohesion.csv",
            Stage::Identity => "identity.csv",
            Stage::Topics => "topics.csv",
            Stage::Sustainability => "summary.csv",
            Stage::Correlate => "correlations.csv",
            Stage::Report => "summary.txt",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::invalid("stage", s))
    }
}

pub struct Pipeline {
    config: PipelineConfig,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Self {
        Pipeline { config }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.config.out.join(stage.name())
    }

    pub fn artifact(&self, stage: Stage, file: &str) -> PathBuf {
        self.stage_dir(stage).join(file)
    }

    pub fn is_complete(&self, stage: Stage) -> bool {
        self.artifact(stage, stage.marker()).is_file()
    }

    /// Fails with the earliest missing prerequisite.
    pub fn check_prerequisites(&self, stage: Stage) -> Result<()> {
        match stage.transitive_requirements().into_iter().find(|s| !self.is_complete(*s)) {
            Some(missing) => Err(Error::MissingStage { missing: missing.name() }),
            None => Ok(()),
        }
    }

    pub fn run(&self, stage: Stage) -> Result<()> {
        self.check_prerequisites(stage)?;
        info!("stage {stage}: start");
        match stage {
            Stage::Ingest => self.ingest(),
            Stage::Cluster => self.cluster(),
            Stage::Cohesion => self.cohesion(),
            Stage::Identity => self.identity(),
            Stage::Topics => self.topics(),
            Stage::Sustainability => self.sustainability(),
            Stage::Correlate => self.correlate(),
            Stage::Report => self.report(),
        }?;
        info!("stage {stage}: done");
        Ok(())
    }

    pub fn run_all(&self) -> Result<()> {
        Stage::ALL.into_iter().try_for_each(|s| self.run(s))
    }

    fn ingested_corpus(&self) -> Result<Corpus> {
        let dir = self.stage_dir(Stage::Ingest);
        Corpus::load(
            &dir.join("posts.jsonl"),
            &dir.join("profiles.jsonl"),
            &dir.join("followers.csv"),
            &CorpusConfig {
                slice_width: self.config.slice_width,
                vocabulary: None,
            },
        )
    }

    fn groups(&self) -> Result<Vec<SocialGroup>> {
        read_groups(
            &self.artifact(Stage::Cluster, "groups.csv"),
            &self.artifact(Stage::Cluster, "snapshots.csv"),
        )
    }

    fn ingest(&self) -> Result<()> {
        let c = &self.config;
        let vocabulary = c.lexicon.as_deref().map(Vocabulary::from_file).transpose()?;
        let corpus = Corpus::load(
            &c.posts,
            &c.profiles,
            &c.followers,
            &CorpusConfig {
                slice_width: c.slice_width,
                vocabulary,
            },
        )?;
        let dir = self.stage_dir(Stage::Ingest);
        let r = corpus.report();
        let summary = format!(
            "posts,{}\nusers,{}\nunknown_users,{}\nfollower_edges,{}\nslices,{}\nslice_start,{}\nskipped_posts,{}\nskipped_profiles,{}\nskipped_followers,{}\nduplicate_followers,{}\n",
            corpus.records().len(),
            corpus.num_users(),
            corpus.unknown_users().len(),
            corpus.followers().len(),
            corpus.num_slices(),
            corpus.clock().start(),
            r.skipped_posts,
            r.skipped_profiles,
            r.skipped_followers,
            r.duplicate_followers,
        );
        info!(
            "ingested {} posts from {} users over {} slices",
            corpus.records().len(),
            corpus.num_users(),
            corpus.num_slices()
        );
        write_atomic(&dir.join("summary.csv"), format!("key,value\n{summary}").as_bytes())?;
        // the marker file goes last so a partial run never looks complete
        corpus.write_canonical(&dir)
    }

    fn cluster(&self) -> Result<()> {
        let corpus = self.ingested_corpus()?;
        let all = grouping::identify_groups(&corpus, &self.config.cluster_params())?;
        let mean = all.iter().map(|g| g.len()).sum::<usize>() as f64 / all.len() as f64;
        let kept = filter_groups(all.clone(), self.config.filter_params());
        info!("{} clusters (mean size {mean:.1}), {} groups after filtering", all.len(), kept.len());
        let dir = self.stage_dir(Stage::Cluster);
        grouping::write_assignments(&dir.join("clusters.csv"), &all)?;
        grouping::write_assignments(&dir.join("groups.csv"), &kept)?;
        grouping::write_snapshots(&dir.join("snapshots.csv"), &kept)
    }

    fn cohesion(&self) -> Result<()> {
        let corpus = self.ingested_corpus()?;
        let groups = self.groups()?;
        let index = FollowerIndex::new(corpus.followers());
        let rows: Vec<(usize, usize, GroupCohesion)> = groups
            .par_iter()
            .map(|g| (g.group_id, g.len(), GroupCohesion::compute(&g.members, &index)))
            .collect();
        let features: Vec<Feature> = cohesion_features().collect();
        let mut out = String::from("group_id,size");
        for f in &features {
            let _ = write!(out, ",{}", f.key());
        }
        out.push('\n');
        for (id, size, c) in rows {
            let gf = GroupFeatures {
                group_id: id,
                cohesion: c,
                ..GroupFeatures::default()
            };
            let _ = write!(out, "{id},{size}");
            for f in &features {
                let _ = write!(out, ",{}", fmt_opt(gf.get(*f)));
            }
            out.push('\n');
        }
        write_atomic(&self.artifact(Stage::Cohesion, "cohesion.csv"), out.as_bytes())
    }

    fn identity(&self) -> Result<()> {
        let corpus = self.ingested_corpus()?;
        let groups = self.groups()?;
        let c = &self.config;
        let gazetteer = match &c.gazetteer {
            Some(p) => Gazetteer::from_file(p)?,
            None => Gazetteer::bundled(),
        };
        let lexicon = match &c.expertise_lexicon {
            Some(p) => ExpertiseLexicon::from_file(p)?,
            None => ExpertiseLexicon::bundled(),
        };
        let labeler = IdentityLabeler::for_corpus(&corpus, gazetteer, lexicon, &c.event_nation);
        let rows: Vec<(usize, GroupIdentity)> = groups
            .par_iter()
            .map(|g| (g.group_id, GroupIdentity::compute(&g.members, &corpus, &labeler)))
            .collect();
        let mut out = String::from("group_id");
        for kind in IdentityKind::ALL {
            let _ = write!(out, ",{}", Feature::Identity(kind).key());
        }
        out.push('\n');
        for (id, ident) in rows {
            let _ = write!(out, "{id}");
            for kind in IdentityKind::ALL {
                let _ = write!(out, ",{}", fmt_opt(ident.get(kind)));
            }
            out.push('\n');
        }
        write_atomic(&self.artifact(Stage::Identity, "identity.csv"), out.as_bytes())
    }

    fn topics(&self) -> Result<()> {
        let corpus = self.ingested_corpus()?;
        let dir = self.stage_dir(Stage::Topics);
        if let Some(provider) = &self.config.topics_provider {
            let table = load_topics(provider, Some(corpus.num_slices()))?;
            info!("using {} topic rows from {}", table.len(), provider.display());
            return write_atomic(&dir.join("topics.csv"), table.to_csv().as_bytes());
        }
        let state = fit_topics(&corpus, &self.config.topic_params())?;
        write_atomic(&dir.join("top_words.csv"), state.top_words_csv(10).as_bytes())?;
        write_atomic(&dir.join("topics.csv"), state.table.to_csv().as_bytes())
    }

    fn sustainability(&self) -> Result<()> {
        let corpus = self.ingested_corpus()?;
        let groups = self.groups()?;
        let table = load_topics(&self.artifact(Stage::Topics, "topics.csv"), Some(corpus.num_slices()))?;
        let eps = self.config.kl_epsilon;
        let all: Vec<_> = groups
            .par_iter()
            .map(|g| sustainability::series(g, corpus.num_slices(), &table, eps))
            .collect();
        let dir = self.stage_dir(Stage::Sustainability);
        write_atomic(&dir.join("series.csv"), sustainability::series_csv(&all).as_bytes())?;
        write_atomic(&dir.join("summary.csv"), sustainability::summary_csv(&all).as_bytes())
    }

    fn features(&self) -> Result<Vec<GroupFeatures>> {
        let cohesion = read_feature_csv(&self.artifact(Stage::Cohesion, "cohesion.csv"))?;
        let identity = read_feature_csv(&self.artifact(Stage::Identity, "identity.csv"))?;
        let mut out = Vec::new();
        for (id, values) in cohesion {
            let mut gf = GroupFeatures {
                group_id: id,
                ..GroupFeatures::default()
            };
            let ident = identity.get(&id);
            for f in Feature::ALL {
                let v = values.get(&f).copied().flatten().or(ident.and_then(|m| m.get(&f).copied().flatten()));
                set_feature(&mut gf, f, v);
            }
            out.push(gf);
        }
        Ok(out)
    }

    fn correlate(&self) -> Result<()> {
        let features = self.features()?;
        let summaries = read_summary(&self.artifact(Stage::Sustainability, "summary.csv"))?;
        let table = CorrelationTable::compute(&self.config.dataset, &features, &summaries);
        let dir = self.stage_dir(Stage::Correlate);
        write_atomic(&dir.join("counts.csv"), table.counts_csv().as_bytes())?;
        write_atomic(&dir.join("correlations.csv"), table.to_csv().as_bytes())
    }

    fn report(&self) -> Result<()> {
        let dataset = &self.config.dataset;
        let text = read_to_string(&self.artifact(Stage::Correlate, "correlations.csv"))?;
        let table = CorrelationTable::parse_csv(dataset, &text)?;
        let features = self.features()?;
        let summaries = read_summary(&self.artifact(Stage::Sustainability, "summary.csv"))?;
        let dir = self.stage_dir(Stage::Report);

        let mut feature_csv = String::from("feature,mean,sd,groups\n");
        for f in Feature::ALL {
            let vals: Vec<f64> = features.iter().filter_map(|g| g.get(f)).collect();
            let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            let _ = writeln!(feature_csv, "{},{},{},{}", f.key(), fixed(mean), fixed(std_dev(&vals)), vals.len());
        }
        write_atomic(&dir.join("features.csv"), feature_csv.as_bytes())?;

        let mut sust_csv = String::from("measure,mean,sd,groups\n");
        for m in Measure::ALL {
            let (mean, sd) = across_groups(&summaries, m);
            let n = summaries.iter().filter(|s| s.get(m).is_some()).count();
            let _ = writeln!(sust_csv, "{},{},{},{n}", m.code(), fixed(mean), fixed(sd));
        }
        write_atomic(&dir.join("sustainability.csv"), sust_csv.as_bytes())?;

        let mut corr_csv = String::from("feature");
        for m in Measure::ALL {
            let _ = write!(corr_csv, ",{}", m.label());
        }
        corr_csv.push('\n');
        let mut table_text = format!("{:<42}", "feature");
        for m in Measure::ALL {
            let _ = write!(table_text, "{:>10}", m.code());
        }
        table_text.push('\n');
        for f in Feature::ALL {
            corr_csv.push_str(&f.key());
            let _ = write!(table_text, "{:<42}", f.label());
            for m in Measure::ALL {
                let r = table.r(f, m);
                let _ = write!(corr_csv, ",{}", fixed(r));
                let mark = if r.is_some_and(|r| r.abs() > HIGHLIGHT_THRESHOLD) { "*" } else { " " };
                let _ = write!(table_text, "{:>9}{mark}", r.map_or_else(|| "NA".into(), |r| format!("{r:+.2}")));
            }
            corr_csv.push('\n');
            table_text.push('\n');
        }
        write_atomic(&dir.join("correlations.csv"), corr_csv.as_bytes())?;

        let hypotheses = hypothesis_report(std::slice::from_ref(&table));
        let mut summary = format!("groups: {}\n\n", summaries.len());
        summary.push_str("sustainability (mean ± sd across groups of each group's mean over time)\n");
        for m in Measure::ALL {
            let (mean, sd) = across_groups(&summaries, m);
            let _ = writeln!(summary, "  {}: {} ± {}", m.code(), fixed(mean), fixed(sd));
        }
        let _ = write!(
            summary,
            "\ncorrelation with group means (* marks |r| > {HIGHLIGHT_THRESHOLD})\n{table_text}\nhypothesis checks (topic divergence column)\n{hypotheses}"
        );
        write_atomic(&dir.join("summary.txt"), summary.as_bytes())
    }
}

fn cohesion_features() -> impl Iterator<Item = Feature> {
    Feature::ALL.into_iter().filter(|f| matches!(f, Feature::Cohesion(..)))
}

fn fixed(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

fn set_feature(gf: &mut GroupFeatures, f: Feature, v: Option<f64>) {
    use crate::inference::CohesionStat;
    match f {
        Feature::Cohesion(mode, stat) => {
            let s = match mode {
                crate::cohesion::Mode::Directed => &mut gf.cohesion.directed,
                crate::cohesion::Mode::Reciprocal => &mut gf.cohesion.reciprocal,
                crate::cohesion::Mode::Undirected => &mut gf.cohesion.undirected,
            };
            match stat {
                CohesionStat::Density => s.density = v,
                CohesionStat::Transitivity => s.transitivity = v,
                CohesionStat::AvgClustering => s.avg_clustering = v,
                CohesionStat::AvgShortestPath => s.avg_shortest_path = v,
            }
        }
        Feature::Identity(IdentityKind::Regional) => gf.identity.regional_entropy = v,
        Feature::Identity(IdentityKind::Expertise) => gf.identity.expertise_entropy = v,
        Feature::Identity(IdentityKind::Aid) => gf.identity.aid_entropy = v,
    }
}

type FeatureRows = BTreeMap<usize, BTreeMap<Feature, Option<f64>>>;

/// Reads a `group_id,...` table whose other columns are feature keys (unknown
/// columns such as `size` are ignored).
fn read_feature_csv(path: &Path) -> Result<FeatureRows> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    if header.first() != Some(&"group_id") {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            expected: "group_id,...".into(),
            found: header.join(","),
        });
    }
    let columns: Vec<Option<Feature>> = header.iter().map(|h| Feature::from_key(h)).collect();
    let mut out = FeatureRows::new();
    for line in lines {
        let bad = || Error::invalid("feature row", format!("{}: {line}", path.display()));
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(bad());
        }
        let id: usize = cells[0].parse().map_err(|_| bad())?;
        let mut row = BTreeMap::new();
        for (col, cell) in columns.iter().zip(&cells).skip(1) {
            if let Some(f) = col {
                row.insert(*f, parse_opt(cell).map_err(|_| bad())?);
            }
        }
        out.insert(id, row);
    }
    Ok(out)
}
