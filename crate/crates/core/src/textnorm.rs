//! Tokenization shared by the lexical metrics.
//!
//! The default rule lowercases, drops every character that is neither
//! alphanumeric nor whitespace, and splits on whitespace. With
//! [`NormalizeOptions::keep_punctuation`] each punctuation character becomes
//! a token of its own instead of being dropped.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;

/// Ordered lowercase word tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    /// Wraps tokens without re-normalizing them.
    ///
    /// Callers that build sequences by hand (tests, oracles) are responsible
    /// for keeping tokens non-empty and whitespace free.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenSequence(tokens.into_iter().map(Into::into).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.0
    }

    /// Tokens joined by single spaces; the lookup key used by embedding files.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenSequence {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.joined())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NormalizeOptions {
    /// Emit punctuation characters as standalone tokens instead of dropping them.
    pub keep_punctuation: bool,
}

/// Normalizes with the default options (punctuation stripped).
pub fn normalize(text: &str) -> TokenSequence {
    normalize_with(text, NormalizeOptions::default())
}

pub fn normalize_with(text: &str, options: NormalizeOptions) -> TokenSequence {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_whitespace() {
            flush(&mut current, &mut tokens);
        } else if ch.is_alphanumeric() {
            // lowercasing can emit combining marks (e.g. U+0130); keep only alphanumerics
            current.extend(ch.to_lowercase().filter(|c| c.is_alphanumeric()));
        } else if options.keep_punctuation {
            flush(&mut current, &mut tokens);
            tokens.push(ch.to_lowercase().collect());
        }
        // otherwise: punctuation or symbol, dropped without splitting ("don't" -> "dont")
    }
    flush(&mut current, &mut tokens);
    TokenSequence(tokens)
}

/// Case-insensitive identity key used for de-duplicating questions.
pub fn dedup_key(text: &str) -> String {
    normalize(text).joined()
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        tokens.push(core::mem::take(current));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(text: &str) -> Vec<String> {
        normalize(text).into_tokens()
    }

    #[test]
    fn strips_question_mark() {
        assert_eq!(
            toks("What are some renewable energy sources?"),
            vec!["what", "are", "some", "renewable", "energy", "sources"]
        );
    }

    #[test]
    fn empty_input() {
        assert!(normalize("").is_empty());
        assert!(normalize("  ?! ").is_empty());
    }

    #[test]
    fn case_punct_whitespace() {
        assert_eq!(toks("  Hello,  WORLD! "), vec!["hello", "world"]);
    }

    #[test]
    fn apostrophe_joins_word() {
        assert_eq!(toks("I'm here"), vec!["im", "here"]);
    }

    #[test]
    fn keep_punctuation_splits_marks() {
        let opts = NormalizeOptions { keep_punctuation: true };
        assert_eq!(normalize_with("Where is it?", opts).into_tokens(), vec!["where", "is", "it", "?"]);
    }

    #[test]
    fn unicode_letters_survive() {
        assert_eq!(toks("Où est-il?"), vec!["où", "estil"]);
    }

    #[test]
    fn dedup_key_ignores_case_and_punctuation() {
        assert_eq!(dedup_key("A?"), dedup_key("a"));
    }
}
