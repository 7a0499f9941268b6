//! Seeded synthetic corpus with matching replay fixtures, for exercising the
//! whole pipeline offline.
//!
//! Every context has one accepted original question, two candidates drawn
//! verbatim from the paraphrases its fixture will return, and one rejected
//! candidate that copies the original but asks about a different country.

use std::path::{Path, PathBuf};

use mre_core::QuizSample;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::augment::{write_fixture, GeneratorConfig};
use crate::dataset::write_dataset;
use crate::error::{MreError, Result};

struct Country {
    name: &'static str,
    capital: &'static str,
    language: &'static str,
    currency: &'static str,
}

const COUNTRIES: &[Country] = &[
    Country { name: "France", capital: "Paris", language: "French", currency: "the euro" },
    Country { name: "Japan", capital: "Tokyo", language: "Japanese", currency: "the yen" },
    Country { name: "Brazil", capital: "Brasilia", language: "Portuguese", currency: "the real" },
    Country { name: "Egypt", capital: "Cairo", language: "Arabic", currency: "the Egyptian pound" },
    Country { name: "Kenya", capital: "Nairobi", language: "Swahili", currency: "the Kenyan shilling" },
    Country { name: "Mexico", capital: "Mexico City", language: "Spanish", currency: "the Mexican peso" },
    Country { name: "Norway", capital: "Oslo", language: "Norwegian", currency: "the Norwegian krone" },
    Country { name: "Vietnam", capital: "Hanoi", language: "Vietnamese", currency: "the dong" },
];

#[derive(Clone, Copy)]
enum Topic {
    Capital,
    Language,
    Currency,
}

impl Topic {
    const ALL: [Topic; 3] = [Topic::Capital, Topic::Language, Topic::Currency];

    /// Interchangeable noun phrases; the first one forms the original question.
    fn phrases(self, country: &str) -> [String; 3] {
        match self {
            Topic::Capital => [
                format!("the capital of {country}"),
                format!("the capital city of {country}"),
                format!("{country}'s seat of government"),
            ],
            Topic::Language => [
                format!("the official language of {country}"),
                format!("the language officially spoken in {country}"),
                format!("{country}'s national tongue"),
            ],
            Topic::Currency => [
                format!("the currency of {country}"),
                format!("the money used in {country}"),
                format!("{country}'s legal tender"),
            ],
        }
    }

    fn answer(self, c: &Country) -> &'static str {
        match self {
            Topic::Capital => c.capital,
            Topic::Language => c.language,
            Topic::Currency => c.currency,
        }
    }

    fn passage(self, c: &Country) -> String {
        match self {
            Topic::Capital => format!("{} is governed from {}, its largest administrative centre.", c.name, c.capital),
            Topic::Language => {
                format!("Most people in {} speak {}, which is also used in government.", c.name, c.language)
            }
            Topic::Currency => format!("Prices in {} are quoted in {}.", c.name, c.currency),
        }
    }
}

const FRAMES: &[&str] = &[
    "What is {}?",
    "Can you tell me what {} is?",
    "Do you know what {} is?",
    "Which one is {}?",
    "Name {}.",
    "What would you say {} is?",
    "I want to know what {} is.",
    "Could you name {}?",
    "Please identify {}.",
    "Tell me {}, please.",
];

fn frame(template: &str, phrase: &str) -> String {
    let mut s = template.replacen("{}", phrase, 1);
    if let Some(first) = s.get(..1) {
        let upper = first.to_uppercase();
        s.replace_range(..1, &upper);
    }
    s
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub samples: Vec<QuizSample>,
    /// Per context: the original question and the paraphrases its fixture returns.
    pub paraphrases: Vec<(String, Vec<String>)>,
}

/// Builds `contexts` contexts of four samples each.
pub fn generate(seed: u64, contexts: usize, n: usize) -> Result<SyntheticCorpus> {
    if contexts > COUNTRIES.len() {
        return Err(MreError::Config(format!("at most {} synthetic contexts", COUNTRIES.len())));
    }
    if n < 2 {
        return Err(MreError::Config("synthetic corpus needs n >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..COUNTRIES.len()).collect();
    order.shuffle(&mut rng);

    let mut samples = Vec::new();
    let mut paraphrases = Vec::new();
    for (i, &ci) in order.iter().take(contexts).enumerate() {
        let country = &COUNTRIES[ci];
        let topic = *Topic::ALL.choose(&mut rng).expect("topics");
        let phrases = topic.phrases(country.name);
        let original = frame(FRAMES[0], &phrases[0]);

        let mut pool: Vec<String> =
            phrases.iter().flat_map(|p| FRAMES.iter().map(move |f| frame(f, p))).filter(|q| *q != original).collect();
        pool.shuffle(&mut rng);
        pool.truncate(n);

        // candidates come from the lexically distant part of the pool
        let distant: Vec<&String> = pool.iter().filter(|q| !q.starts_with("What is")).collect();
        let picked: Vec<&&String> = distant.choose_multiple(&mut rng, 2).collect();

        let decoy = loop {
            let other = COUNTRIES.choose(&mut rng).expect("countries");
            if other.name != country.name {
                break frame(FRAMES[0], &topic.phrases(other.name)[0]);
            }
        };

        let ctx = format!("ctx-{:03}", i + 1);
        let passage = topic.passage(country);
        let answer = topic.answer(country);
        let second: Vec<u8> = if rand::Rng::random_bool(&mut rng, 0.5) { vec![1, 1, 1] } else { vec![1, 1, 0] };
        let rejected: Vec<u8> = if rand::Rng::random_bool(&mut rng, 0.5) { vec![0, 0, 0] } else { vec![1, 0, 0] };
        let mut push = |question: &str, ann: Vec<u8>| -> Result<()> {
            samples.push(QuizSample::new(ctx.clone(), passage.clone(), answer, question, ann)?);
            Ok(())
        };
        push(&original, vec![1, 1, 1])?;
        let mut rows = vec![((*picked[0]).clone(), vec![1, 1, 1])];
        if let Some(p) = picked.get(1) {
            rows.push(((**p).clone(), second));
        }
        rows.push((decoy, rejected));
        rows.shuffle(&mut rng);
        for (q, ann) in rows {
            push(&q, ann)?;
        }
        paraphrases.push((original, pool));
    }
    Ok(SyntheticCorpus { samples, paraphrases })
}

#[derive(Debug, Clone)]
pub struct SynthPaths {
    pub dataset: PathBuf,
    pub fixtures: PathBuf,
}

/// Writes `dataset.jsonl` and a `fixtures/` directory that answers the
/// augmentation requests `config` will make.
pub fn write(out_dir: &Path, seed: u64, contexts: usize, config: &GeneratorConfig) -> Result<SynthPaths> {
    let corpus = generate(seed, contexts, config.n)?;
    std::fs::create_dir_all(out_dir).map_err(|e| MreError::io(out_dir, e))?;
    let dataset = out_dir.join("dataset.jsonl");
    let fixtures = out_dir.join("fixtures");
    write_dataset(&dataset, &corpus.samples)?;
    for (original, items) in &corpus.paraphrases {
        let completion: String = items.iter().enumerate().map(|(i, p)| format!("{}. {p}\n", i + 1)).collect();
        write_fixture(&fixtures, &config.request(original), 0, &completion)?;
    }
    Ok(SynthPaths { dataset, fixtures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_corpus() {
        let a = generate(7, 5, 20).unwrap();
        let b = generate(7, 5, 20).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_ne!(generate(8, 5, 20).unwrap().samples, a.samples);
    }

    #[test]
    fn shape() {
        let c = generate(1, 5, 20).unwrap();
        assert_eq!(c.samples.len(), 20);
        for (original, items) in &c.paraphrases {
            assert_eq!(items.len(), 20);
            assert!(!items.contains(original));
        }
        for chunk in c.samples.chunks(4) {
            assert!(chunk[0].is_accepted());
            let (_, pool) = c.paraphrases.iter().find(|(o, _)| *o == chunk[0].question).unwrap();
            let from_pool = chunk[1..].iter().filter(|s| pool.contains(&s.question)).count();
            assert_eq!(from_pool, 2);
            assert!(chunk[1..].iter().any(|s| s.human_score() < 0.5));
        }
    }

    #[test]
    fn frames_capitalize() {
        assert_eq!(frame("{}?", "japan's x"), "Japan's x?");
        assert_eq!(frame("Name {}.", "the capital of Oslo"), "Name the capital of Oslo.");
    }
}
