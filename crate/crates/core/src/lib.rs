//! Social group analysis for event-oriented interaction corpora.
//!
//! The crate takes a corpus of posts (with retweet, reply and mention
//! interactions), user profiles and a follower list, and:
//!
//! 1. slices the corpus into fixed-width time windows ([`corpus`]),
//! 2. clusters the interaction graph into social groups with a multi-level
//!    modularity scheme and materializes per-slice active snapshots ([`grouping`]),
//! 3. measures structural cohesion of each group's follower subgraph under
//!    directed, reciprocal and undirected induction ([`cohesion`]),
//! 4. measures identity diversity as the entropy of regional, expertise and
//!    activity/popularity/diffusion classes ([`identity`]),
//! 5. fits a chained per-slice topic model and derives group topic divergence
//!    ([`topics`]), membership stability and growth rate ([`sustainability`]),
//! 6. correlates features with sustainability and runs the exact one-sided
//!    binomial comparison of reciprocal against undirected cohesion ([`inference`]).
//!
//! [`pipeline`] wires the stages together over on-disk CSV/JSONL artifacts and
//! [`synth`] generates corpora with planted structure.

pub mod cohesion;
pub mod config;
pub mod corpus;
pub mod error;
pub mod grouping;
pub mod identity;
pub mod inference;
pub mod pipeline;
pub mod sustainability;
pub mod synth;
pub mod topics;

mod io_util;

pub use config::PipelineConfig;
pub use corpus::{Corpus, InteractionRecord, UserId, UserProfile};
pub use error::{Error, Result};
pub use grouping::SocialGroup;
