//! Scored-records file: one [`EvaluationRecord`] per line.

use std::path::Path;

use mre_core::EvaluationRecord;

use crate::error::Result;
use crate::jsonl;

pub fn read_records(path: &Path) -> Result<Vec<EvaluationRecord>> {
    Ok(jsonl::read(path)?.into_iter().map(|(_, r)| r).collect())
}

pub fn write_records(path: &Path, records: &[EvaluationRecord]) -> Result<()> {
    jsonl::write(path, records)
}
