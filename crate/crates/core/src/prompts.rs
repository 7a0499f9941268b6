//! Paraphrase prompts and parsing of numbered-list completions.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::Error;
use crate::textnorm::dedup_key;

/// Bumped whenever the prompt text changes; part of the augmentation cache key.
pub const PROMPT_TEMPLATE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GenerationMode {
    ZeroShot,
    FewShot,
}

impl GenerationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GenerationMode::ZeroShot => "zero_shot",
            GenerationMode::FewShot => "few_shot",
        }
    }
}

impl fmt::Display for GenerationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GenerationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "zero_shot" | "zero" | "0-shot" => Ok(GenerationMode::ZeroShot),
            "few_shot" | "few" | "3-shot" => Ok(GenerationMode::FewShot),
            _ => Err(Error::Configuration(format!("unknown generation mode `{s}`"))),
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for GenerationMode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for GenerationMode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A worked example shown to the model in few-shot mode.
pub struct Demonstration {
    /// Text following the `Sentence: ` label.
    pub sentence: &'static str,
    pub paraphrases: [&'static str; 20],
}

// The third label is doubled ("Sentence: Sentence: ...") in the original prompt; kept verbatim.
pub const DEMONSTRATIONS: [Demonstration; 3] = [
    Demonstration {
        sentence: "What is this software found useful for?",
        paraphrases: [
            "For what purpose is this software deemed useful?",
            "What are the uses of this software?",
            "Can you tell me what this software is useful for?",
            "What are the benefits of this software?",
            "In what ways is this software found to be useful?",
            "What are the applications of this software?",
            "Can you explain the usefulness of this software?",
            "What does this software excel at?",
            "Can you tell me what tasks this software is useful for?",
            "In what scenario is this software useful?",
            "Can you describe the utility of this software?",
            "What is the purpose of this software?",
            "For what is this software commonly used?",
            "What does this software aid in?",
            "Can you tell me the function of this software?",
            "What are the advantages of this software?",
            "What is this software good for?",
            "In what ways does this software provide value?",
            "What is the benefit of using this software?",
            "Can you tell me what this software is commonly used for?",
        ],
    },
    Demonstration {
        sentence: "Who is the girl?",
        paraphrases: [
            "Can you tell me the name of the young lady?",
            "Who is the female in question?",
            "Could you identify the girl for me?",
            "To whom are you referring as the girl?",
            "The girl, who is she?",
            "Could you tell me who the girl is?",
            "Who is the young woman being spoken of?",
            "Can you name the girl in question?",
            "Who is the lady in question?",
            "Could you give me the name of the girl?",
            "Who is being referred to as the girl?",
            "Can you tell me who the female is?",
            "Who is the girl being discussed?",
            "Can you identify the young lady?",
            "The girl, can you tell me her name?",
            "Who is the subject of the girl?",
            "Can you name the female in question?",
            "Who is the girl you are asking about?",
            "Can you provide the name of the girl?",
            "Who is the young woman being referred to?",
        ],
    },
    Demonstration {
        sentence: "Sentence: Where is the Eiffel Tower?",
        paraphrases: [
            "Can you tell me the location of the Eiffel Tower?",
            "Could you inform me where the Eiffel Tower is situated?",
            "I'm wondering where the Eiffel Tower is located?",
            "The Eiffel Tower, where can I find it?",
            "Could you give me the whereabouts of the Eiffel Tower?",
            "The Eiffel Tower, where is it located?",
            "Can you indicate the location of the Eiffel Tower?",
            "Can you provide me with the location of the Eiffel Tower?",
            "Where can I find the Eiffel Tower?",
            "The Eiffel Tower, where is it situated?",
            "Can you tell me where the Eiffel Tower is located?",
            "Could you give me the location of the Eiffel Tower?",
            "Where is the Eiffel Tower situated?",
            "The Eiffel Tower, where is it found?",
            "Could you inform me where the Eiffel Tower can be found?",
            "Can you give me the whereabouts of the Eiffel Tower?",
            "Where is the Eiffel Tower located?",
            "The Eiffel Tower, where is it positioned?",
            "Can you indicate the whereabouts of the Eiffel Tower?",
            "Can you provide me with the whereabouts of the Eiffel Tower?",
        ],
    },
];

impl Demonstration {
    /// The numbered block as it appears in the prompt (no trailing newline).
    pub fn numbered_list(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.paraphrases.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&format!("{}. {}", i + 1, p));
        }
        out
    }
}

/// Builds the paraphrase prompt for `question`, asking for `n` paraphrases.
pub fn build_prompt(question: &str, mode: GenerationMode, n: usize) -> String {
    let instruction = format!("Please paraphrase the following sentence {n} times:");
    match mode {
        GenerationMode::ZeroShot => format!("{instruction}\n{question}"),
        GenerationMode::FewShot => {
            let mut prompt = instruction;
            prompt.push('\n');
            for demo in &DEMONSTRATIONS {
                prompt.push_str(&format!("\nSentence: {}\n{}\n", demo.sentence, demo.numbered_list()));
            }
            prompt.push_str("\nSentence: ");
            prompt.push_str(question);
            prompt
        }
    }
}

/// Extracts items from a numbered list (`1. ...`, `2) ...`, `3: ...`, `4 - ...`).
///
/// Lines without a leading number are ignored. Items are trimmed, empty ones
/// dropped, and later items that repeat an earlier one (case-insensitive,
/// after normalization) removed.
pub fn parse_paraphrases(completion: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    completion
        .lines()
        .filter_map(numbered_item)
        .filter(|item| {
            let key = dedup_key(item);
            !key.is_empty() && seen.insert(key)
        })
        .map(String::from)
        .collect()
}

fn numbered_item(line: &str) -> Option<&str> {
    let line = line.trim_start();
    let digits = line.len() - line.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    let rest = line[digits..].trim_start();
    let rest = rest.strip_prefix(['.', ')', ':', '-'])?;
    let item = rest.trim();
    (!item.is_empty()).then_some(item)
}
