//! Writes a synthetic corpus and runs every pipeline stage over it.
//!
//! `cargo run --release --example full_pipeline -- /tmp/groupdyn-demo`

use std::path::PathBuf;

use groupdyn::pipeline::{Pipeline, Stage};
use groupdyn::synth::{generate, SyntheticSpec};
use groupdyn::PipelineConfig;

fn main() -> groupdyn::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("groupdyn-demo"));
    std::fs::create_dir_all(&dir).expect("create output directory");

    let spec = SyntheticSpec {
        groups: 12,
        members_per_group: 30,
        ..SyntheticSpec::default()
    };
    generate(&spec)?.write(&dir)?;
    let mut config = PipelineConfig::load(&dir.join("groupdyn.toml"))?;
    config.target_group_size = 30.0;

    let pipeline = Pipeline::new(config);
    for stage in Stage::ALL {
        pipeline.run(stage)?;
        println!("{stage:<15} -> {}", pipeline.stage_dir(stage).display());
    }
    let summary = std::fs::read_to_string(pipeline.artifact(Stage::Report, "summary.txt")).expect("read summary");
    println!("\n{summary}");
    Ok(())
}
