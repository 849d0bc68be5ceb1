//! Persistence formats, corpus synthesis and report schemas behind the
//! command-line surface.

pub mod config;
pub mod corpus;
pub mod report;
pub mod synth;

pub use config::{ComposeSettings, RunConfig, PRNG_NAME};
pub use corpus::{read_corpus, write_corpus, CorpusHeader};
pub use report::{
    read_journal, write_journal, DecomposeReport, HierarchyReport, NodeReport, SummaryReport,
};
pub use synth::{synthesize, GeneratorSpec, GroundTruth, PlantedParent};
