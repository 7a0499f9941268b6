//! File formats, providers, paraphrase augmentation and the command-line
//! front end built on top of `mre-core`.

pub mod augment;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod jsonl;
pub mod pipeline;
pub mod providers;
pub mod records;
pub mod refs;
pub mod synth;

pub use error::{MreError, Result};
