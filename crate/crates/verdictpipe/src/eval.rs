//! Stratified splitting, classification reports, confusion matrices, and a
//! synthetic corpus generator for desk-scale end-to-end runs.
//!
//! Report rendering follows the conventional table shape: per-class rows
//! (allow / dismiss / dispose), then accuracy, macro average, and weighted
//! average, with precision / recall / f1-score columns at two decimals.

use serde::Serialize;
use thiserror::Error;

use crate::labeler::Disposition;
use crate::rng::DetRng;
use crate::vectorizer::{format_significant, Dataset};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("y_true and y_pred have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no samples")]
    Empty,
    #[error("class {class} has only {count} samples; need at least 2 to split")]
    ClassTooSmall { class: Disposition, count: usize },
}

/// Train/test split settings. The defaults reproduce an 80%-20% split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub test_ratio: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_ratio: 0.20,
            seed: 42,
        }
    }
}

/// Split per class: each class contributes round(test_ratio * n_c) test
/// samples (at least 1, at most n_c - 1), chosen by a seeded shuffle of
/// that class's doc_ids. Row order within each part follows the input.
pub fn stratified_split(ds: &Dataset, cfg: &SplitConfig) -> Result<(Dataset, Dataset), EvalError> {
    assert!(
        cfg.test_ratio > 0.0 && cfg.test_ratio < 1.0,
        "test_ratio must be in (0, 1)"
    );
    if ds.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut in_test = vec![false; ds.len()];
    for class in Disposition::ALL {
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(EvalError::ClassTooSmall {
                class,
                count: members.len(),
            });
        }
        // canonical doc_id order makes the shuffle independent of row order
        members.sort_by(|&a, &b| ds.doc_ids[a].cmp(&ds.doc_ids[b]));
        let mut rng = DetRng::with_stream(cfg.seed, class.index() as u64);
        rng.shuffle(&mut members);
        let n_c = members.len();
        let take = ((cfg.test_ratio * n_c as f64).round() as usize)
            .max(1)
            .min(n_c - 1);
        for &i in &members[..take] {
            in_test[i] = true;
        }
    }
    let select = |keep_test: bool| -> Dataset {
        let idx: Vec<usize> = (0..ds.len()).filter(|&i| in_test[i] == keep_test).collect();
        Dataset {
            vectors: idx.iter().map(|&i| ds.vectors[i].clone()).collect(),
            labels: idx.iter().map(|&i| ds.labels[i]).collect(),
            feature_names: ds.feature_names.clone(),
            doc_ids: idx.iter().map(|&i| ds.doc_ids[i].clone()).collect(),
        }
    };
    Ok((select(false), select(true)))
}

/// 3x3 confusion counts: rows are true classes, columns predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    /// Row-normalized matrix; zero-support rows are all zero.
    pub fn normalized(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in self.counts.iter().enumerate() {
            let support: u64 = row.iter().sum();
            if support > 0 {
                for (j, &c) in row.iter().enumerate() {
                    out[i][j] = c as f64 / support as f64;
                }
            }
        }
        out
    }

    pub fn support(&self, class: Disposition) -> u64 {
        self.counts[class.index()].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Raw counts as CSV with labeled rows and columns.
    pub fn counts_csv(&self) -> String {
        let mut out = String::from("true\\predicted,allow,dismiss,dispose\n");
        for class in Disposition::ALL {
            let row = self.counts[class.index()];
            out.push_str(&format!("{},{},{},{}\n", class, row[0], row[1], row[2]));
        }
        out
    }

    /// Row-normalized matrix as CSV (6 significant digits).
    pub fn normalized_csv(&self) -> String {
        let norm = self.normalized();
        let mut out = String::from("true\\predicted,allow,dismiss,dispose\n");
        for class in Disposition::ALL {
            let row = norm[class.index()];
            out.push_str(&format!(
                "{},{},{},{}\n",
                class,
                format_significant(row[0], 6),
                format_significant(row[1], 6),
                format_significant(row[2], 6)
            ));
        }
        out
    }
}

/// Count the confusion matrix of a prediction run.
pub fn confusion(
    y_true: &[Disposition],
    y_pred: &[Disposition],
) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut counts = [[0u64; 3]; 3];
    for (t, p) in y_true.iter().zip(y_pred) {
        counts[t.index()][p.index()] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AverageMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-class precision/recall/F1 plus accuracy and macro / weighted
/// averages, all at full precision (rendering rounds to two decimals).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub per_class: [ClassMetrics; 3],
    pub accuracy: f64,
    pub macro_avg: AverageMetrics,
    pub weighted_avg: AverageMetrics,
    pub confusion: ConfusionMatrix,
}

fn safe_div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Compute the classification report from parallel label lists.
pub fn classification_report(
    y_true: &[Disposition],
    y_pred: &[Disposition],
) -> Result<ClassificationReport, EvalError> {
    let confusion = confusion(y_true, y_pred)?;
    let total = confusion.total() as f64;
    let mut per_class = [ClassMetrics {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        support: 0,
    }; 3];
    for class in Disposition::ALL {
        let k = class.index();
        let tp = confusion.counts[k][k] as f64;
        let predicted: u64 = (0..3).map(|i| confusion.counts[i][k]).sum();
        let support = confusion.support(class);
        let precision = safe_div(tp, predicted as f64);
        let recall = safe_div(tp, support as f64);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class[k] = ClassMetrics {
            precision,
            recall,
            f1,
            support,
        };
    }
    let accuracy = (0..3).map(|k| confusion.counts[k][k]).sum::<u64>() as f64 / total;
    let macro_avg = AverageMetrics {
        precision: per_class.iter().map(|m| m.precision).sum::<f64>() / 3.0,
        recall: per_class.iter().map(|m| m.recall).sum::<f64>() / 3.0,
        f1: per_class.iter().map(|m| m.f1).sum::<f64>() / 3.0,
    };
    let weighted = |f: fn(&ClassMetrics) -> f64| -> f64 {
        per_class
            .iter()
            .map(|m| m.support as f64 * f(m))
            .sum::<f64>()
            / total
    };
    let weighted_avg = AverageMetrics {
        precision: weighted(|m| m.precision),
        recall: weighted(|m| m.recall),
        f1: weighted(|m| m.f1),
    };
    Ok(ClassificationReport {
        per_class,
        accuracy,
        macro_avg,
        weighted_avg,
        confusion,
    })
}

impl ClassificationReport {
    /// Aligned plain-text table in the conventional report shape.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:>12}  {:>9}  {:>6}  {:>8}\n",
            "", "precision", "recall", "f1-score"
        ));
        for class in Disposition::ALL {
            let m = &self.per_class[class.index()];
            out.push_str(&format!(
                "{:>12}  {:>9.2}  {:>6.2}  {:>8.2}\n",
                class.as_str(),
                m.precision,
                m.recall,
                m.f1
            ));
        }
        out.push_str(&format!(
            "{:>12}  {:>9}  {:>6}  {:>8.2}\n",
            "accuracy", "", "", self.accuracy
        ));
        out.push_str(&format!(
            "{:>12}  {:>9.2}  {:>6.2}  {:>8.2}\n",
            "macro avg", self.macro_avg.precision, self.macro_avg.recall, self.macro_avg.f1
        ));
        out.push_str(&format!(
            "{:>12}  {:>9.2}  {:>6.2}  {:>8.2}\n",
            "weighted avg",
            self.weighted_avg.precision,
            self.weighted_avg.recall,
            self.weighted_avg.f1
        ));
        out
    }

    /// Machine-readable form with full-precision values.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Sentence-count ranges for the synthetic corpus generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthConfig {
    /// Inclusive range of neutral boilerplate sentences per document.
    pub neutral_sentences: (usize, usize),
    /// Inclusive range of class-correlated sentences per document.
    pub class_sentences: (usize, usize),
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            neutral_sentences: (5, 20),
            class_sentences: (3, 8),
        }
    }
}

pub const NEUTRAL_SENTENCES: [&str; 15] = [
    "The matter arises from proceedings before the High Court.",
    "Heard learned counsel for the parties at length.",
    "Leave was sought to pursue the present challenge.",
    "The record was examined with the assistance of counsel.",
    "The factual background has been set out in the pleadings.",
    "Notice was issued and the respondents entered appearance.",
    "Written submissions were filed by both sides.",
    "The relevant statutory framework was placed before the court.",
    "The procedural history of the matter is not in dispute.",
    "Arguments were concluded and judgment was reserved earlier.",
    "The documentary evidence was marked without objection.",
    "Learned counsel relied upon several precedents of this court.",
    "The questions raised are of some importance to the parties.",
    "The rival contentions were examined with care.",
    "Liberty was sought to place additional material on record.",
];

const CLASS_SENTENCE_TEMPLATES: [&str; 4] = [
    "The record reflects {w1} and {w2} throughout the proceedings.",
    "Counsel emphasised {w1} coupled with {w2} in the submissions.",
    "The tribunal noted {w1} as well as {w2} on the facts.",
    "Questions of {w1} and {w2} weighed with the court.",
];

pub const ALLOW_WORDS: [&str; 12] = [
    "restoration",
    "reinstatement",
    "vindication",
    "exoneration",
    "entitlement",
    "favourable",
    "succeeding",
    "upholding",
    "redressal",
    "restitution",
    "prevailing",
    "affirmative",
];

pub const DISMISS_WORDS: [&str; 12] = [
    "rejection",
    "untenable",
    "devoid",
    "frivolous",
    "baseless",
    "unsustainable",
    "vexatious",
    "futile",
    "unfounded",
    "misconceived",
    "barred",
    "dilatory",
];

pub const DISPOSE_WORDS: [&str; 12] = [
    "clarification",
    "modification",
    "directive",
    "compliance",
    "remand",
    "verification",
    "formalities",
    "undertaking",
    "settlement",
    "adjournment",
    "mediation",
    "supervision",
];

/// Disposition sentences, one list per class, all matching the default
/// labeler patterns for that class and no other.
pub const DISPOSITION_SENTENCES: [[&str; 4]; 3] = [
    [
        "In the result, the appeal is allowed.",
        "Consequently, the appeals are allowed.",
        "The appeal stands allowed.",
        "Appeal allowed with no order as to costs.",
    ],
    [
        "In the result, the appeal is dismissed.",
        "Consequently, the appeals are dismissed.",
        "The appeal stands dismissed.",
        "The petition is dismissed with no order as to costs.",
    ],
    [
        "The appeal is disposed of accordingly.",
        "The writ petition stands disposed of.",
        "Both matters are disposed of in the above terms.",
        "The appeal stands disposed of with liberty as prayed.",
    ],
];

fn class_words(class: Disposition) -> &'static [&'static str; 12] {
    match class {
        Disposition::Allow => &ALLOW_WORDS,
        Disposition::Dismiss => &DISMISS_WORDS,
        Disposition::Dispose => &DISPOSE_WORDS,
    }
}

/// Generate `n` synthetic judgment texts with ground-truth labels.
///
/// Classes are assigned round-robin. Each document mixes neutral
/// boilerplate with class-correlated sentences and ends with exactly one
/// template disposition sentence that the default labeler patterns match.
/// Output is fully determined by `(n, seed, cfg)`.
pub fn generate_synthetic_corpus(
    n: usize,
    seed: u64,
    cfg: &SynthConfig,
) -> Vec<(String, Disposition)> {
    assert!(n >= 30, "synthetic corpus needs at least 30 documents");
    let mut docs = Vec::with_capacity(n);
    for i in 0..n {
        let class = Disposition::from_index(i % 3).expect("round robin index");
        let mut rng = DetRng::with_stream(seed, i as u64);
        let n_neutral =
            rng.gen_range_inclusive(cfg.neutral_sentences.0, cfg.neutral_sentences.1);
        let n_class = rng.gen_range_inclusive(cfg.class_sentences.0, cfg.class_sentences.1);
        let words = class_words(class);
        let mut sentences: Vec<String> = Vec::with_capacity(n_neutral + n_class + 1);
        for _ in 0..n_neutral {
            sentences.push(NEUTRAL_SENTENCES[rng.gen_range(NEUTRAL_SENTENCES.len())].to_string());
        }
        for _ in 0..n_class {
            let template = CLASS_SENTENCE_TEMPLATES[rng.gen_range(CLASS_SENTENCE_TEMPLATES.len())];
            let w1 = words[rng.gen_range(words.len())];
            let w2 = words[rng.gen_range(words.len())];
            sentences.push(template.replace("{w1}", w1).replace("{w2}", w2));
        }
        rng.shuffle(&mut sentences);
        let closings = &DISPOSITION_SENTENCES[class.index()];
        sentences.push(closings[rng.gen_range(closings.len())].to_string());
        docs.push((sentences.join(" "), class));
    }
    docs
}
