//! Deterministic tokenizer: Unicode word segmentation, lowercasing, stopword
//! removal, and protected multi-word phrases.
//!
//! Protected phrases (e.g. "basel ii") are matched greedily on the raw
//! lowercased word stream before any filtering, so their components survive
//! even when one of them is a numeral or a stopword. The merged token joins
//! the components with `_`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

/// A compact default English stopword list. Override with
/// [`TokenizerConfig::with_stopwords`] or the `--stopwords` flag.
pub const DEFAULT_STOPWORDS: &str = include_str!("stopwords_en.txt");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenizerConfig {
    /// Lowercased stopwords, removed after segmentation.
    pub stopwords: BTreeSet<String>,
    /// Lowercased multi-word sequences merged into single tokens.
    pub protected_phrases: Vec<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            stopwords: DEFAULT_STOPWORDS
                .lines()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect(),
            protected_phrases: Vec::new(),
        }
    }
}

impl TokenizerConfig {
    /// Replaces the stopword list (entries are lowercased).
    pub fn with_stopwords<I: IntoIterator<Item = String>>(mut self, words: I) -> Self {
        self.stopwords = words.into_iter().map(|w| w.to_lowercase()).collect();
        self
    }

    /// Adds protected phrases (entries are lowercased; whitespace-separated).
    pub fn with_protected_phrases<I: IntoIterator<Item = String>>(mut self, phrases: I) -> Self {
        self.protected_phrases = phrases.into_iter().map(|p| p.to_lowercase()).collect();
        self
    }
}

fn is_word_like(tok: &str) -> bool {
    tok.chars().any(|c| c.is_alphabetic())
}

/// Tokenizes one document body. Returns the filtered token stream; an empty
/// result means the document should be flagged empty and excluded downstream.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    // Raw pass: every word-boundary token, lowercased, keeping numerals so
    // protected phrases like "basel ii" can still match.
    let raw: Vec<String> = text
        .unicode_words()
        .map(|w| w.to_lowercase())
        .collect();

    // Protected-phrase pass: greedy left-to-right longest match.
    let protected: Vec<Vec<String>> = config
        .protected_phrases
        .iter()
        .map(|p| p.split_whitespace().map(str::to_string).collect())
        .filter(|p: &Vec<String>| !p.is_empty())
        .collect();

    let mut merged: Vec<(String, bool)> = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        let mut matched: Option<usize> = None;
        for phrase in &protected {
            if phrase.len() > 1
                && i + phrase.len() <= raw.len()
                && raw[i..i + phrase.len()] == phrase[..]
                && matched.map_or(true, |m| phrase.len() > m)
            {
                matched = Some(phrase.len());
            }
        }
        match matched {
            Some(len) => {
                merged.push((raw[i..i + len].join("_"), true));
                i += len;
            }
            None => {
                merged.push((raw[i].clone(), false));
                i += 1;
            }
        }
    }

    merged
        .into_iter()
        .filter(|(tok, is_protected)| {
            *is_protected || (is_word_like(tok) && !config.stopwords.contains(tok))
        })
        .map(|(tok, _)| tok)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_with(stop: &[&str], protected: &[&str]) -> TokenizerConfig {
        TokenizerConfig::default()
            .with_stopwords(stop.iter().map(|s| s.to_string()))
            .with_protected_phrases(protected.iter().map(|s| s.to_string()))
    }

    #[test]
    fn stopwords_and_punctuation_removed() {
        let cfg = config_with(&["the"], &[]);
        let toks = tokenize("The Federal Reserve raised rates.", &cfg);
        assert_eq!(toks, vec!["federal", "reserve", "raised", "rates"]);
    }

    #[test]
    fn all_stopwords_yields_empty_stream() {
        let cfg = config_with(&["the", "and", "of"], &[]);
        assert!(tokenize("The and of the and.", &cfg).is_empty());
    }

    #[test]
    fn protected_phrase_survives_with_numeral_component() {
        let cfg = config_with(&["the"], &["basel ii"]);
        let toks = tokenize("Basel II implementation", &cfg);
        assert_eq!(toks, vec!["basel_ii", "implementation"]);
    }

    #[test]
    fn numerals_dropped_outside_protected_phrases() {
        let cfg = config_with(&[], &[]);
        let toks = tokenize("inflation was 2 percent in 2004", &cfg);
        assert_eq!(toks, vec!["inflation", "was", "percent", "in"]);
    }

    #[test]
    fn protected_match_is_greedy_left_to_right() {
        let cfg = config_with(&[], &["repo rate", "rate decision"]);
        // "repo rate" wins the shared word; "decision" is left alone.
        let toks = tokenize("repo rate decision", &cfg);
        assert_eq!(toks, vec!["repo_rate", "decision"]);
    }

    #[test]
    fn tokenization_is_deterministic() {
        let cfg = config_with(&["the", "a"], &["stress test"]);
        let text = "The supervisor ran a stress test; the Stress Test passed.";
        assert_eq!(tokenize(text, &cfg), tokenize(text, &cfg));
        assert_eq!(
            tokenize(text, &cfg),
            vec!["supervisor", "ran", "stress_test", "stress_test", "passed"]
        );
    }
}
