//! Multi-reference evaluation of generated questions.
//!
//! Scores a candidate question against a gold reference and against the
//! reference plus paraphrases (taking the maximum), then correlates both
//! kinds of score with human judgments.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, HTTP providers
//! and the command-line front end live in the `mre` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod embedding;
mod error;
pub mod evaluation;
pub mod lexical;
pub mod metric;
pub mod prompts;
pub mod stats;
pub mod textnorm;
pub mod transport;

pub use corpus::{human_score, split_corpus, CorpusSplit, QuizSample};
pub use embedding::{
    bertscore, word_mover_score, BertScore, EmbeddingProvider, Embeddings, ExternalScorer, OneHotProvider,
};
pub use error::{Error, Result};
pub use evaluation::{delta_report, n_sweep, EvaluationRecord, Evaluator, ModeScores, ReferenceScores, ReferenceSet};
pub use lexical::{bleu4, meteor, rouge_l};
pub use metric::{MetricId, MetricScore};
pub use prompts::{build_prompt, parse_paraphrases, GenerationMode};
pub use stats::{correlation_report, pearson, spearman, CorrelationReport};
pub use textnorm::{normalize, TokenSequence};
pub use transport::{solve_transport, TransportProblem, TransportSolution};
