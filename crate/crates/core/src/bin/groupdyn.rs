use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use groupdyn::pipeline::{Pipeline, Stage};
use groupdyn::synth::{self, SyntheticSpec};
use groupdyn::{Error, PipelineConfig, Result};

#[derive(Parser)]
#[command(name = "groupdyn", version, about = "Social group cohesion, identity and sustainability analysis")]
struct Cli {
    /// Flat key-value config file; unset keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the clustering and topic model seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the artifact directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides any config key, e.g. `--set topics=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load, tokenize and slice the corpus.
    Ingest,
    /// Cluster the interaction graph and filter groups.
    Cluster(ClusterArgs),
    /// Follower-subgraph cohesion statistics per group.
    Cohesion,
    /// Identity entropies per group.
    Identity(IdentityArgs),
    /// Fit the topic model or import a provider table.
    Topics(TopicArgs),
    /// Topic divergence, membership stability and growth rate series.
    Sustainability,
    /// Feature/sustainability correlation table.
    Correlate,
    /// Summary tables, hypothesis checks and binomial tests.
    Report,
    /// Run every stage in order.
    All,
    /// Generate a synthetic corpus with planted structure.
    Synth(SynthArgs),
    /// Print the effective configuration.
    Config {
        /// Include unset optional keys as comments.
        #[arg(long)]
        dump: bool,
    },
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    target_size: Option<f64>,
    #[arg(long)]
    min_size: Option<usize>,
    #[arg(long)]
    min_active: Option<usize>,
}

#[derive(Args)]
struct IdentityArgs {
    #[arg(long)]
    event_nation: Option<String>,
}

#[derive(Args)]
struct TopicArgs {
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Precomputed `user,slice,p1..pK` table.
    #[arg(long)]
    provider: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory receiving the corpus files and a matching groupdyn.toml.
    dir: PathBuf,
    #[arg(long, default_value_t = SyntheticSpec::default().groups)]
    groups: usize,
    #[arg(long, default_value_t = SyntheticSpec::default().members_per_group)]
    members: usize,
    #[arg(long, default_value_t = SyntheticSpec::default().slices)]
    slices: usize,
}

fn apply_overrides(mut config: PipelineConfig, sets: &[String]) -> Result<PipelineConfig> {
    if sets.is_empty() {
        return Ok(config);
    }
    let mut table: toml::Table = toml::from_str(&config.to_toml()).map_err(|e| Error::Config(e.to_string()))?;
    for s in sets {
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("`--set {s}`: expected KEY=VALUE")))?;
        let value = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_owned()));
        table.insert(key.trim().to_owned(), value);
    }
    config = PipelineConfig::from_toml(&toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?)?;
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    config = apply_overrides(config, &cli.set)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out.clone() {
        config.out = out;
    }

    let stage = match cli.command {
        Command::Ingest => Stage::Ingest,
        Command::Cluster(a) => {
            if let Some(v) = a.target_size {
                config.target_group_size = v;
            }
            if let Some(v) = a.min_size {
                config.min_group_size = v;
            }
            if let Some(v) = a.min_active {
                config.min_active_slices = v;
            }
            Stage::Cluster
        }
        Command::Cohesion => Stage::Cohesion,
        Command::Identity(a) => {
            if let Some(v) = a.event_nation {
                config.event_nation = v;
            }
            Stage::Identity
        }
        Command::Topics(a) => {
            if let Some(v) = a.topics {
                config.topics = v;
            }
            if let Some(v) = a.iterations {
                config.gibbs_iterations = v;
            }
            if a.provider.is_some() {
                config.topics_provider = a.provider;
            }
            Stage::Topics
        }
        Command::Sustainability => Stage::Sustainability,
        Command::Correlate => Stage::Correlate,
        Command::Report => Stage::Report,
        Command::All => return Pipeline::new(config).run_all(),
        Command::Synth(a) => {
            let spec = SyntheticSpec {
                groups: a.groups,
                members_per_group: a.members,
                slices: a.slices,
                seed: cli.seed.unwrap_or(1),
                ..SyntheticSpec::default()
            };
            synth::generate(&spec)?.write(&a.dir)?;
            log::info!("synthetic corpus written to {}", a.dir.display());
            return Ok(());
        }
        Command::Config { dump } => {
            print!("{}", if dump { config.dump() } else { config.to_toml() });
            return Ok(());
        }
    };
    Pipeline::new(config).run(stage)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GROUPDYN_LOG", "info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
