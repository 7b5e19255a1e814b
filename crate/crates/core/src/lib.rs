pub mod assembler;
pub mod config;
pub mod corpus_io;
pub mod domain_vocab;
pub mod error;
pub mod instruction_mixer;
pub mod pattern_miner;
pub mod pipeline;
pub mod probe_builder;
pub mod seed;
pub mod stats_report;
pub mod task_factory;

pub use error::{Error, Result};
