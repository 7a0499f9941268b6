use alloc::borrow::ToOwned;
use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use crate::error::Error;

/// Identifies a similarity metric.
///
/// Text form: `bleu4`, `rouge_l`, `meteor`, `bertscore`, `moverscore`, or
/// `external:<label>` for a remote learned scorer such as BLEURT.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricId {
    Bleu4,
    RougeL,
    Meteor,
    BertScore,
    MoverScore,
    External(String),
}

impl MetricId {
    /// Metrics computed without any provider or remote scorer.
    pub const LEXICAL: [MetricId; 3] = [MetricId::Bleu4, MetricId::RougeL, MetricId::Meteor];

    pub fn name(&self) -> String {
        self.to_string()
    }

    pub fn is_external(&self) -> bool {
        matches!(self, MetricId::External(_))
    }

    pub fn needs_embeddings(&self) -> bool {
        matches!(self, MetricId::BertScore | MetricId::MoverScore)
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricId::Bleu4 => f.write_str("bleu4"),
            MetricId::RougeL => f.write_str("rouge_l"),
            MetricId::Meteor => f.write_str("meteor"),
            MetricId::BertScore => f.write_str("bertscore"),
            MetricId::MoverScore => f.write_str("moverscore"),
            MetricId::External(label) => write!(f, "external:{label}"),
        }
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        Ok(match s {
            "bleu4" => MetricId::Bleu4,
            "rouge_l" => MetricId::RougeL,
            "meteor" => MetricId::Meteor,
            "bertscore" => MetricId::BertScore,
            "moverscore" => MetricId::MoverScore,
            _ => match s.strip_prefix("external:") {
                Some(label) if !label.is_empty() && !label.contains(char::is_whitespace) => {
                    MetricId::External(label.to_owned())
                }
                _ => return Err(Error::Configuration(alloc::format!("unknown metric `{s}`"))),
            },
        })
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for MetricId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for MetricId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A metric value `s` under metric `M`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricScore {
    pub metric: MetricId,
    pub value: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn names_round_trip() {
        let all = [
            MetricId::Bleu4,
            MetricId::RougeL,
            MetricId::Meteor,
            MetricId::BertScore,
            MetricId::MoverScore,
            MetricId::External("bleurt".into()),
        ];
        for id in all {
            assert_eq!(id.to_string().parse::<MetricId>().unwrap(), id);
        }
    }

    #[test]
    fn rejects_unknown_names() {
        for bad in ["bleu", "ROUGE", "external:", "external:a b", ""] {
            assert!(matches!(bad.parse::<MetricId>(), Err(Error::Configuration(_))), "{bad}");
        }
    }

    #[test]
    fn ordering_is_stable() {
        let mut ids: Vec<MetricId> =
            ["meteor", "bleu4", "external:z", "rouge_l"].iter().map(|s| s.parse().unwrap()).collect();
        ids.sort();
        assert_eq!(ids[0], MetricId::Bleu4);
        assert!(ids[3].is_external());
    }
}
