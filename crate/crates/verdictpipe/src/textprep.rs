//! Text normalization and n-gram generation.
//!
//! The pipeline applies a fixed sequence to raw judgment text: lowercase,
//! punctuation -> space, digit removal, whitespace tokenization, short-word
//! and stopword filtering, then stemming. N-grams of the resulting tokens
//! (joined with `_`) are the feature units fed to the vectorizer.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub mod porter;

/// Stemmer selection for the normalization pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StemmerKind {
    Porter,
    None,
}

/// Normalization settings.
///
/// Serialized inside the model bundle so that prediction-time processing
/// is byte-for-byte the processing the model was trained with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepConfig {
    /// Tokens shorter than this many characters are dropped (pre-stemming).
    pub min_token_len: usize,
    /// Lowercase stopword set, checked before stemming.
    pub stopwords: BTreeSet<String>,
    /// Maximum n-gram order, in 1..=4.
    pub ngram_max: usize,
    pub stemmer: StemmerKind,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            min_token_len: 3,
            stopwords: default_stopwords(),
            ngram_max: 4,
            stemmer: StemmerKind::Porter,
        }
    }
}

impl PrepConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_token_len == 0 {
            return Err("min_token_len must be >= 1".into());
        }
        if !(1..=4).contains(&self.ngram_max) {
            return Err(format!("ngram_max must be in 1..=4, got {}", self.ngram_max));
        }
        for w in &self.stopwords {
            if w.chars().any(|c| c.is_uppercase() || c.is_numeric()) {
                return Err(format!("stopword {w:?} must be lowercase and digit-free"));
            }
        }
        Ok(())
    }
}

/// The bundled English stopword list (179 entries, one per line).
pub fn default_stopwords() -> BTreeSet<String> {
    include_str!("stopwords_en.txt")
        .lines()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect()
}

/// Normalize raw text into the token stream used for feature extraction.
///
/// Steps, in order: (1) lowercase; (2) every non-alphanumeric character
/// becomes a space; (3) digit characters are deleted; (4) split on
/// whitespace runs; (5) drop tokens shorter than `min_token_len`; (6) drop
/// stopwords; (7) stem each survivor. An empty result is legal.
///
/// Stemming applies only to all-ASCII tokens; tokens in other scripts pass
/// through unchanged (the stemmer is defined over `[a-z]+`).
pub fn normalize(raw_text: &str, cfg: &PrepConfig) -> Vec<String> {
    let lowered = raw_text.to_lowercase();
    let mut cleaned = String::with_capacity(lowered.len());
    for ch in lowered.chars() {
        if ch.is_alphanumeric() {
            if !ch.is_numeric() {
                cleaned.push(ch);
            }
        } else {
            cleaned.push(' ');
        }
    }
    cleaned
        .split_whitespace()
        .filter(|t| t.chars().count() >= cfg.min_token_len)
        .filter(|t| !cfg.stopwords.contains(*t))
        .map(|t| match cfg.stemmer {
            StemmerKind::Porter => porter::stem(t),
            StemmerKind::None => t.to_string(),
        })
        .collect()
}

/// Multiset of n-gram occurrences for one document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NgramBag {
    counts: HashMap<String, u32>,
}

impl NgramBag {
    pub fn counts(&self) -> &HashMap<String, u32> {
        &self.counts
    }

    pub fn contains(&self, term: &str) -> bool {
        self.counts.contains_key(term)
    }

    /// Number of distinct n-grams.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// Total occurrences across all n-grams.
    pub fn total_occurrences(&self) -> u64 {
        self.counts.values().map(|&c| c as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Generate contiguous 1..=min(ngram_max, len) grams; keys are tokens
/// joined with `_`, duplicate occurrences accumulate.
pub fn ngrams(tokens: &[String], ngram_max: usize) -> NgramBag {
    assert!((1..=4).contains(&ngram_max), "ngram_max must be in 1..=4");
    let mut counts = HashMap::new();
    for n in 1..=ngram_max.min(tokens.len()) {
        for window in tokens.windows(n) {
            *counts.entry(window.join("_")).or_insert(0) += 1;
        }
    }
    NgramBag { counts }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_disposition_sentence() {
        let cfg = PrepConfig::default();
        let tokens = normalize("The appeal is DISMISSED with costs of Rs. 5000.", &cfg);
        assert_eq!(tokens, vec!["appeal", "dismiss", "cost"]);
    }

    #[test]
    fn normalize_empty_and_all_filtered() {
        let cfg = PrepConfig::default();
        assert!(normalize("", &cfg).is_empty());
        assert!(normalize("a an 42 .", &cfg).is_empty());
    }

    #[test]
    fn digits_deleted_inside_tokens() {
        let cfg = PrepConfig::default();
        // "rs5000" -> "rs" -> dropped by the length filter
        assert!(normalize("rs5000", &cfg).is_empty());
        // digit deletion can leave a long-enough token
        assert_eq!(normalize("sec42tion", &cfg), vec!["section"]);
    }

    #[test]
    fn hyphens_and_apostrophes_split() {
        let cfg = PrepConfig::default();
        assert_eq!(
            normalize("court-ordered don't", &cfg),
            vec!["court", "order"]
        );
    }

    #[test]
    fn stopwords_checked_before_stemming() {
        let cfg = PrepConfig::default();
        // "doing" is a stopword and is dropped; "doings" is not and stems to "do"
        assert!(normalize("doing", &cfg).is_empty());
        assert_eq!(normalize("doings", &cfg), vec!["do"]);
    }

    #[test]
    fn stopword_list_size() {
        assert_eq!(default_stopwords().len(), 179);
    }

    #[test]
    fn ngram_counts_and_keys() {
        let toks: Vec<String> = ["appeal", "allow", "cost"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let bag = ngrams(&toks, 4);
        assert_eq!(bag.total_occurrences(), 6);
        for key in [
            "appeal",
            "allow",
            "cost",
            "appeal_allow",
            "allow_cost",
            "appeal_allow_cost",
        ] {
            assert_eq!(bag.counts().get(key), Some(&1));
        }
    }

    #[test]
    fn ngram_empty_input() {
        assert!(ngrams(&[], 4).is_empty());
    }

    #[test]
    fn ngram_bigram_occurrences() {
        let toks: Vec<String> = (0..5).map(|i| format!("tok{i}")).collect();
        // length filter not involved here; 5 unigrams + 4 bigrams
        assert_eq!(ngrams(&toks, 2).total_occurrences(), 9);
    }

    #[test]
    fn ngram_duplicates_accumulate() {
        let toks: Vec<String> = ["order", "order", "order"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let bag = ngrams(&toks, 2);
        assert_eq!(bag.counts().get("order"), Some(&3));
        assert_eq!(bag.counts().get("order_order"), Some(&2));
    }

    #[test]
    fn config_validation() {
        let bad_ngram = PrepConfig {
            ngram_max: 5,
            ..PrepConfig::default()
        };
        assert!(bad_ngram.validate().is_err());
        let bad_len = PrepConfig {
            min_token_len: 0,
            ..PrepConfig::default()
        };
        assert!(bad_len.validate().is_err());
        assert!(PrepConfig::default().validate().is_ok());
    }
}
