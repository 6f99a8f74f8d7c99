//! Disposition extraction from judgment text.
//!
//! Indian Supreme Court judgments state the operative order in their final
//! sentences, so the labeler scans a trailing window of sentences against
//! an ordered pattern list. The last sentence with any match decides the
//! label; within a sentence the first pattern in configuration order wins.

use std::fmt;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The three decision classes, in canonical report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Disposition {
    Allow,
    Dismiss,
    Dispose,
}

impl Disposition {
    pub const ALL: [Disposition; 3] = [
        Disposition::Allow,
        Disposition::Dismiss,
        Disposition::Dispose,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Disposition::Allow => "allow",
            Disposition::Dismiss => "dismiss",
            Disposition::Dispose => "dispose",
        }
    }

    /// Canonical index (allow=0, dismiss=1, dispose=2).
    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn from_index(i: usize) -> Option<Disposition> {
        Disposition::ALL.get(i).copied()
    }

    pub fn parse(s: &str) -> Option<Disposition> {
        match s {
            "allow" => Some(Disposition::Allow),
            "dismiss" => Some(Disposition::Dismiss),
            "dispose" => Some(Disposition::Dispose),
            _ => None,
        }
    }
}

impl fmt::Display for Disposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a document could not be labeled. Unlabeled is a value, not a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnlabeledReason {
    Empty,
    NoMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelOutcome {
    Labeled(Disposition),
    Unlabeled(UnlabeledReason),
}

impl LabelOutcome {
    pub fn label(&self) -> Option<Disposition> {
        match self {
            LabelOutcome::Labeled(d) => Some(*d),
            LabelOutcome::Unlabeled(_) => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LabelerError {
    #[error("failed to read pattern file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("pattern file line {line}: {reason}")]
    BadPatternLine { line: usize, reason: String },
    #[error("invalid regex {pattern:?}: {source}")]
    BadRegex {
        pattern: String,
        source: regex::Error,
    },
    #[error("pattern list must cover every disposition; missing {0}")]
    MissingClass(Disposition),
}

/// One (pattern, label) rule. Patterns are matched against lowercased
/// sentences, so they should be written in lowercase.
#[derive(Debug, Clone)]
pub struct LabelPattern {
    pub label: Disposition,
    pub pattern: String,
    regex: Regex,
}

impl LabelPattern {
    pub fn new(label: Disposition, pattern: &str) -> Result<Self, LabelerError> {
        let regex = Regex::new(pattern).map_err(|source| LabelerError::BadRegex {
            pattern: pattern.to_string(),
            source,
        })?;
        Ok(LabelPattern {
            label,
            pattern: pattern.to_string(),
            regex,
        })
    }

    pub fn is_match(&self, sentence: &str) -> bool {
        self.regex.is_match(sentence)
    }
}

impl PartialEq for LabelPattern {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.pattern == other.pattern
    }
}

/// Labeler settings: how many trailing sentences to scan and the ordered
/// pattern list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LabelerConfigRepr", into = "LabelerConfigRepr")]
pub struct LabelerConfig {
    pub tail_sentences: usize,
    pub patterns: Vec<LabelPattern>,
}

#[derive(Serialize, Deserialize)]
struct LabelerConfigRepr {
    tail_sentences: usize,
    patterns: Vec<PatternRepr>,
}

#[derive(Serialize, Deserialize)]
struct PatternRepr {
    label: Disposition,
    pattern: String,
}

impl From<LabelerConfig> for LabelerConfigRepr {
    fn from(cfg: LabelerConfig) -> Self {
        LabelerConfigRepr {
            tail_sentences: cfg.tail_sentences,
            patterns: cfg
                .patterns
                .into_iter()
                .map(|p| PatternRepr {
                    label: p.label,
                    pattern: p.pattern,
                })
                .collect(),
        }
    }
}

impl TryFrom<LabelerConfigRepr> for LabelerConfig {
    type Error = LabelerError;

    fn try_from(repr: LabelerConfigRepr) -> Result<Self, LabelerError> {
        let patterns = repr
            .patterns
            .iter()
            .map(|p| LabelPattern::new(p.label, &p.pattern))
            .collect::<Result<Vec<_>, _>>()?;
        let cfg = LabelerConfig {
            tail_sentences: repr.tail_sentences.max(1),
            patterns,
        };
        cfg.check_coverage()?;
        Ok(cfg)
    }
}

impl Default for LabelerConfig {
    fn default() -> Self {
        let defaults: [(Disposition, &str); 7] = [
            (Disposition::Allow, r"appeal(s)? (is|are|stand(s)?) allowed"),
            (Disposition::Allow, r"appeal(s)? allowed"),
            (
                Disposition::Dismiss,
                r"appeal(s)? (is|are|stand(s)?) dismissed",
            ),
            (Disposition::Dismiss, r"appeal(s)? dismissed"),
            (Disposition::Dismiss, r"petition(s)? (is|are) dismissed"),
            (Disposition::Dispose, r"disposed of"),
            (Disposition::Dispose, r"stand(s)? disposed"),
        ];
        LabelerConfig {
            tail_sentences: 20,
            patterns: defaults
                .iter()
                .map(|(label, pat)| {
                    LabelPattern::new(*label, pat).expect("default patterns compile")
                })
                .collect(),
        }
    }
}

impl LabelerConfig {
    fn check_coverage(&self) -> Result<(), LabelerError> {
        if self.patterns.is_empty() {
            return Err(LabelerError::MissingClass(Disposition::Allow));
        }
        for class in Disposition::ALL {
            if !self.patterns.iter().any(|p| p.label == class) {
                return Err(LabelerError::MissingClass(class));
            }
        }
        Ok(())
    }

    /// Load an override pattern list: one `label<TAB>pattern` per line,
    /// order significant. Blank lines and `#` comments are skipped.
    pub fn from_pattern_file(path: &Path, tail_sentences: usize) -> Result<Self, LabelerError> {
        let text = std::fs::read_to_string(path).map_err(|source| LabelerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut patterns = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (label, pattern) =
                line.split_once('\t')
                    .ok_or_else(|| LabelerError::BadPatternLine {
                        line: i + 1,
                        reason: "expected label<TAB>pattern".into(),
                    })?;
            let label = Disposition::parse(label).ok_or_else(|| LabelerError::BadPatternLine {
                line: i + 1,
                reason: format!("unknown label {label:?}"),
            })?;
            patterns.push(LabelPattern::new(label, pattern)?);
        }
        let cfg = LabelerConfig {
            tail_sentences: tail_sentences.max(1),
            patterns,
        };
        cfg.check_coverage()?;
        Ok(cfg)
    }
}

/// Split text into sentences on `.`, `?`, `!`, or `;` followed by
/// whitespace. The terminator stays with its sentence; a trailing fragment
/// without a terminator is a sentence of its own.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut sentences = Vec::new();
    let bytes = text.as_bytes();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, ch)) = chars.next() {
        if matches!(ch, '.' | '?' | '!' | ';') {
            if let Some(&(_, next)) = chars.peek() {
                if next.is_whitespace() {
                    let end = i + ch.len_utf8();
                    let sentence = text[start..end].trim();
                    if !sentence.is_empty() {
                        sentences.push(sentence);
                    }
                    start = end;
                }
            }
        }
    }
    if start < bytes.len() {
        let tail = text[start..].trim();
        if !tail.is_empty() {
            sentences.push(tail);
        }
    }
    sentences
}

/// Extract the decision class from judgment text.
///
/// Scans the last `tail_sentences` sentences; the last sentence with any
/// pattern match decides, and within that sentence the first pattern in
/// configuration order wins.
pub fn extract_disposition(raw_text: &str, cfg: &LabelerConfig) -> LabelOutcome {
    if raw_text.trim().is_empty() {
        return LabelOutcome::Unlabeled(UnlabeledReason::Empty);
    }
    let sentences = split_sentences(raw_text);
    let tail_start = sentences.len().saturating_sub(cfg.tail_sentences);
    let mut decided = None;
    for sentence in &sentences[tail_start..] {
        let lowered = sentence.to_lowercase();
        if let Some(p) = cfg.patterns.iter().find(|p| p.is_match(&lowered)) {
            decided = Some(p.label);
        }
    }
    match decided {
        Some(label) => LabelOutcome::Labeled(label),
        None => LabelOutcome::Unlabeled(UnlabeledReason::NoMatch),
    }
}

/// Remove every sentence that matches any labeler pattern.
///
/// Used to keep operative-order sentences out of training features, so the
/// measured accuracy reflects prediction rather than label leakage.
pub fn strip_disposition_sentences(raw_text: &str, cfg: &LabelerConfig) -> String {
    split_sentences(raw_text)
        .into_iter()
        .filter(|s| {
            let lowered = s.to_lowercase();
            !cfg.patterns.iter().any(|p| p.is_match(&lowered))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> LabelerConfig {
        LabelerConfig::default()
    }

    #[test]
    fn direct_dismiss() {
        let text = "Heard counsel for the parties. In the result, the appeal is dismissed.";
        assert_eq!(
            extract_disposition(text, &defaults()),
            LabelOutcome::Labeled(Disposition::Dismiss)
        );
    }

    #[test]
    fn direct_allow() {
        let text = "Leave granted. The appeals are allowed and the impugned order is set aside.";
        assert_eq!(
            extract_disposition(text, &defaults()),
            LabelOutcome::Labeled(Disposition::Allow)
        );
    }

    #[test]
    fn last_matching_sentence_wins() {
        let text = "The appeal is dismissed. However, on reconsideration, \
                    the connected appeal is allowed in part.";
        assert_eq!(
            extract_disposition(text, &defaults()),
            LabelOutcome::Labeled(Disposition::Allow)
        );
    }

    #[test]
    fn no_match_and_empty() {
        assert_eq!(
            extract_disposition("The court reserved judgment.", &defaults()),
            LabelOutcome::Unlabeled(UnlabeledReason::NoMatch)
        );
        assert_eq!(
            extract_disposition("   \n ", &defaults()),
            LabelOutcome::Unlabeled(UnlabeledReason::Empty)
        );
    }

    #[test]
    fn first_pattern_wins_within_sentence() {
        // both an allow and a dismiss phrase in one sentence: list order decides
        let text = "The appeal stands allowed while the cross appeal is dismissed.";
        assert_eq!(
            extract_disposition(text, &defaults()),
            LabelOutcome::Labeled(Disposition::Allow)
        );
    }

    #[test]
    fn decisive_sentence_outside_tail_window_is_ignored() {
        let mut cfg = defaults();
        cfg.tail_sentences = 2;
        let text = "The appeal is allowed. Costs reserved. Parties to bear their own costs.";
        assert_eq!(
            extract_disposition(text, &cfg),
            LabelOutcome::Unlabeled(UnlabeledReason::NoMatch)
        );
    }

    #[test]
    fn sentence_splitting() {
        let s = split_sentences("One. Two? Three! Four; Five.");
        assert_eq!(s, vec!["One.", "Two?", "Three!", "Four;", "Five."]);
        // terminator not followed by whitespace does not split
        let s = split_sentences("Section 5.2 applies. Done");
        assert_eq!(s, vec!["Section 5.2 applies.", "Done"]);
    }

    #[test]
    fn strip_removes_only_matching_sentences() {
        let cfg = defaults();
        let text = "The facts are undisputed. In the result, the appeal is dismissed.";
        assert_eq!(strip_disposition_sentences(text, &cfg), "The facts are undisputed.");
    }

    #[test]
    fn pattern_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("patterns.tsv");
        std::fs::write(
            &path,
            "# custom rules\nallow\tappeal succeeds\ndismiss\tappeal fails\ndispose\tmatter closed\n",
        )
        .unwrap();
        let cfg = LabelerConfig::from_pattern_file(&path, 20).unwrap();
        assert_eq!(cfg.patterns.len(), 3);
        assert_eq!(
            extract_disposition("The appeal succeeds.", &cfg),
            LabelOutcome::Labeled(Disposition::Allow)
        );
    }

    #[test]
    fn pattern_file_requires_all_classes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("patterns.tsv");
        std::fs::write(&path, "allow\tappeal succeeds\n").unwrap();
        assert!(LabelerConfig::from_pattern_file(&path, 20).is_err());
    }

    #[test]
    fn serde_round_trip_recompiles() {
        let cfg = defaults();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: LabelerConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(
            extract_disposition("The appeal is dismissed.", &back),
            LabelOutcome::Labeled(Disposition::Dismiss)
        );
    }
}
