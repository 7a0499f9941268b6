//! The augmented-references file, one paraphrase set per source question:
//! `{"source_question", "model", "mode", "temperature", "paraphrases"}`.

use std::collections::HashMap;
use std::path::Path;

use mre_core::evaluation::Provenance;
use mre_core::prompts::GenerationMode;
use mre_core::textnorm::dedup_key;
use mre_core::ReferenceSet;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::jsonl;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedRecord {
    pub source_question: String,
    pub model: String,
    pub mode: GenerationMode,
    pub temperature: f64,
    pub paraphrases: Vec<String>,
}

impl AugmentedRecord {
    pub fn from_reference_set(refs: &ReferenceSet, model: &str, mode: GenerationMode, temperature: f64) -> Self {
        AugmentedRecord {
            source_question: refs.original().to_string(),
            model: model.to_string(),
            mode,
            temperature,
            paraphrases: refs.paraphrases().to_vec(),
        }
    }

    pub fn to_reference_set(&self) -> ReferenceSet {
        ReferenceSet::new(self.source_question.clone(), self.paraphrases.iter().cloned()).with_provenance(Provenance {
            generator: self.model.clone(),
            mode: self.mode.to_string(),
            temperature: self.temperature,
        })
    }
}

pub fn read_refs(path: &Path) -> Result<Vec<AugmentedRecord>> {
    Ok(jsonl::read(path)?.into_iter().map(|(_, r)| r).collect())
}

pub fn write_refs(path: &Path, records: &[AugmentedRecord]) -> Result<()> {
    jsonl::write(path, records)
}

/// Paraphrase sets keyed by normalized source question. The first record
/// for a question wins.
#[derive(Debug, Default)]
pub struct ReferenceIndex {
    by_question: HashMap<String, AugmentedRecord>,
}

impl ReferenceIndex {
    pub fn new(records: Vec<AugmentedRecord>) -> Self {
        let mut by_question = HashMap::new();
        for r in records {
            by_question.entry(dedup_key(&r.source_question)).or_insert(r);
        }
        ReferenceIndex { by_question }
    }

    /// The reference set for `question`; `None` if it was never augmented.
    pub fn lookup(&self, question: &str) -> Option<ReferenceSet> {
        self.by_question.get(&dedup_key(question)).map(|r| {
            let mut refs = r.to_reference_set();
            if refs.original() != question {
                // keep the dataset's spelling of the original
                refs = ReferenceSet::new(question, refs.paraphrases().to_vec())
                    .with_provenance(refs.provenance.clone().expect("set above"));
            }
            refs
        })
    }

    pub fn len(&self) -> usize {
        self.by_question.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_question.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_is_case_insensitive() {
        let index = ReferenceIndex::new(vec![AugmentedRecord {
            source_question: "Who is she?".into(),
            model: "m".into(),
            mode: GenerationMode::ZeroShot,
            temperature: 0.5,
            paraphrases: vec!["Who's she?".into(), "who is she".into()],
        }]);
        let refs = index.lookup("who is SHE").unwrap();
        assert_eq!(refs.original(), "who is SHE");
        assert_eq!(refs.paraphrases(), &["Who's she?".to_string()]);
        assert_eq!(refs.provenance.unwrap().temperature, 0.5);
        assert!(index.lookup("Where?").is_none());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("refs.jsonl");
        let rec = AugmentedRecord {
            source_question: "Q?".into(),
            model: "text-davinci-003".into(),
            mode: GenerationMode::FewShot,
            temperature: 0.5,
            paraphrases: vec!["A?".into()],
        };
        write_refs(&path, std::slice::from_ref(&rec)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "{\"source_question\":\"Q?\",\"model\":\"text-davinci-003\",\"mode\":\"few_shot\",\"temperature\":0.5,\"paraphrases\":[\"A?\"]}\n"
        );
        assert_eq!(read_refs(&path).unwrap(), vec![rec]);
    }
}
