//! The annotated dataset: one JSON object per line with `context_id`,
//! `context`, `answer`, `question` and `annotations` (array of 0/1).

use std::path::Path;

use mre_core::QuizSample;
use serde::{Deserialize, Serialize};

use crate::error::{MreError, Result};
use crate::jsonl;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub context_id: String,
    pub context: String,
    pub answer: String,
    pub question: String,
    pub annotations: Vec<u8>,
}

impl From<&QuizSample> for SampleRecord {
    fn from(s: &QuizSample) -> Self {
        SampleRecord {
            context_id: s.context_id.clone(),
            context: s.context.clone(),
            answer: s.answer.clone(),
            question: s.question.clone(),
            annotations: s.annotations().to_vec(),
        }
    }
}

/// A loaded sample and the line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSample {
    pub line: usize,
    pub sample: QuizSample,
}

/// Loads every sample in file order, with human scores computed.
pub fn load_dataset(path: &Path) -> Result<Vec<QuizSample>> {
    Ok(load_dataset_lines(path)?.into_iter().map(|l| l.sample).collect())
}

pub fn load_dataset_lines(path: &Path) -> Result<Vec<LoadedSample>> {
    jsonl::read::<SampleRecord>(path)?
        .into_iter()
        .map(|(line, r)| {
            let schema = |message: String| MreError::Schema { path: path.to_path_buf(), line, message };
            if r.annotations.is_empty() {
                return Err(schema("`annotations` is empty".into()));
            }
            if let Some(bad) = r.annotations.iter().find(|&&a| a > 1) {
                return Err(schema(format!("annotation {bad} is not 0 or 1")));
            }
            let sample = QuizSample::new(r.context_id, r.context, r.answer, r.question, r.annotations)
                .map_err(|e| schema(e.to_string()))?;
            Ok(LoadedSample { line, sample })
        })
        .collect()
}

pub fn write_dataset(path: &Path, samples: &[QuizSample]) -> Result<()> {
    let records: Vec<SampleRecord> = samples.iter().map(SampleRecord::from).collect();
    jsonl::write(path, &records)
}
