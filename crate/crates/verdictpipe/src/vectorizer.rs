//! N-gram vocabulary construction, TF-IDF weighting, and CSV export.
//!
//! Terms below the minimum document-frequency ratio are pruned; retained
//! terms get the smoothed inverse document frequency
//! `idf = ln((1+N)/(1+df)) + 1`, and document vectors are raw-count
//! weighted then L2-normalized.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeler::Disposition;
use crate::textprep::NgramBag;

#[derive(Debug, Error)]
pub enum VectorizeError {
    #[error("empty corpus: no documents to build a vocabulary from")]
    EmptyCorpus,
    #[error("empty vocabulary: no term meets min_df_ratio {0} (threshold too aggressive)")]
    EmptyVocabulary(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("io failure on {path}: {source}")]
    IoFailure {
        path: String,
        source: std::io::Error,
    },
    #[error("csv parse error at line {line}: {reason}")]
    CsvParse { line: usize, reason: String },
}

/// Term-to-index map with document frequencies and IDF weights.
///
/// Terms are sorted lexicographically; `index` is the inverse of `terms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<u32>,
    idf: Vec<f64>,
    pub corpus_size: usize,
    pub min_df_ratio: f64,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    df: Vec<u32>,
    idf: Vec<f64>,
    min_df_ratio: f64,
    corpus_size: usize,
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            terms: v.terms,
            df: v.df,
            idf: v.idf,
            min_df_ratio: v.min_df_ratio,
            corpus_size: v.corpus_size,
        }
    }
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = String;

    fn try_from(r: VocabularyRepr) -> Result<Self, String> {
        if r.terms.len() != r.df.len() || r.terms.len() != r.idf.len() {
            return Err("vocabulary arrays have mismatched lengths".into());
        }
        let index = r
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Vocabulary {
            terms: r.terms,
            index,
            df: r.df,
            idf: r.idf,
            corpus_size: r.corpus_size,
            min_df_ratio: r.min_df_ratio,
        })
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, i: usize) -> u32 {
        self.df[i]
    }

    pub fn idf(&self, i: usize) -> f64 {
        self.idf[i]
    }
}

/// Smoothed inverse document frequency.
pub fn idf_value(corpus_size: usize, df: u32) -> f64 {
    ((1.0 + corpus_size as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Minimum document count implied by the ratio (at least 1).
pub fn min_df_count(corpus_size: usize, min_df_ratio: f64) -> u32 {
    ((min_df_ratio * corpus_size as f64).ceil() as u32).max(1)
}

/// Build the pruned vocabulary over per-document n-gram bags.
///
/// `df(t)` counts bags containing `t` at least once; terms with
/// `df < ceil(min_df_ratio * N)` are discarded.
pub fn build_vocabulary(bags: &[NgramBag], min_df_ratio: f64) -> Result<Vocabulary, VectorizeError> {
    assert!(
        min_df_ratio > 0.0 && min_df_ratio <= 1.0,
        "min_df_ratio must be in (0, 1]"
    );
    if bags.is_empty() {
        return Err(VectorizeError::EmptyCorpus);
    }
    let n = bags.len();
    let mut df_map: HashMap<&str, u32> = HashMap::new();
    for bag in bags {
        for term in bag.counts().keys() {
            *df_map.entry(term.as_str()).or_insert(0) += 1;
        }
    }
    let threshold = min_df_count(n, min_df_ratio);
    let mut terms: Vec<&str> = df_map
        .iter()
        .filter(|(_, &df)| df >= threshold)
        .map(|(&t, _)| t)
        .collect();
    terms.sort_unstable();
    if terms.is_empty() {
        return Err(VectorizeError::EmptyVocabulary(min_df_ratio));
    }
    let df: Vec<u32> = terms.iter().map(|t| df_map[t]).collect();
    let idf: Vec<f64> = df.iter().map(|&d| idf_value(n, d)).collect();
    let index = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.to_string(), i))
        .collect();
    Ok(Vocabulary {
        terms: terms.into_iter().map(|t| t.to_string()).collect(),
        index,
        df,
        idf,
        corpus_size: n,
        min_df_ratio,
    })
}

/// Sparse, L2-normalized TF-IDF document representation.
///
/// `entries` hold (vocabulary index, weight) sorted by index; `l2_norm` is
/// the Euclidean norm of the raw count*idf vector before normalization
/// (0.0 for an empty vector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub entries: Vec<(usize, f64)>,
    pub l2_norm: f64,
}

impl FeatureVector {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Value at a vocabulary index (0.0 when absent).
    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }
}

/// Weight the bag against the vocabulary (`count * idf`), then
/// L2-normalize. Out-of-vocabulary terms are ignored; an empty result is
/// legal.
pub fn vectorize(bag: &NgramBag, vocab: &Vocabulary) -> FeatureVector {
    let mut entries: Vec<(usize, f64)> = bag
        .counts()
        .iter()
        .filter_map(|(term, &count)| {
            vocab
                .position(term)
                .map(|i| (i, count as f64 * vocab.idf(i)))
        })
        .collect();
    entries.sort_unstable_by_key(|&(i, _)| i);
    let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in entries.iter_mut() {
            *w /= norm;
        }
    }
    FeatureVector {
        entries,
        l2_norm: norm,
    }
}

/// Vectorized, labeled corpus: all lists are parallel.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub vectors: Vec<FeatureVector>,
    pub labels: Vec<Disposition>,
    pub feature_names: Vec<String>,
    pub doc_ids: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}

/// Format with the given number of significant digits, in the style of
/// C's `%g`: fixed notation in a readable exponent range, scientific
/// otherwise, trailing zeros trimmed.
pub fn format_significant(x: f64, sig: usize) -> String {
    assert!(sig >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let formatted = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = formatted
        .split_once('e')
        .expect("exponential format contains 'e'");
    let exp: i32 = exp.parse().expect("valid exponent");
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if neg { "-" } else { "" };
    if exp < -4 || exp >= sig as i32 {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{mantissa}e{exp}");
    }
    let mut out = String::new();
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    } else {
        let point = (exp + 1) as usize;
        if point >= digits.len() {
            out.push_str(&digits);
            for _ in 0..(point - digits.len()) {
                out.push('0');
            }
        } else {
            out.push_str(&digits[..point]);
            out.push('.');
            out.push_str(&digits[point..]);
        }
    }
    if out.contains('.') {
        out = out
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string();
    }
    format!("{sign}{out}")
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Render the dataset as dense CSV: feature columns then a `label` column,
/// weights at 6 significant digits. Byte output is deterministic.
pub fn csv_text(ds: &Dataset) -> Result<String, VectorizeError> {
    if ds.is_empty() {
        return Err(VectorizeError::EmptyDataset);
    }
    let mut out = String::new();
    for name in &ds.feature_names {
        out.push_str(&csv_escape(name));
        out.push(',');
    }
    out.push_str("label\n");
    for (vector, label) in ds.vectors.iter().zip(&ds.labels) {
        let mut dense = vec![0.0f64; ds.feature_names.len()];
        for &(i, w) in &vector.entries {
            dense[i] = w;
        }
        for w in dense {
            out.push_str(&format_significant(w, 6));
            out.push(',');
        }
        out.push_str(label.as_str());
        out.push('\n');
    }
    Ok(out)
}

/// Write the dataset CSV to disk.
pub fn export_csv(ds: &Dataset, path: &Path) -> Result<(), VectorizeError> {
    let text = csv_text(ds)?;
    std::fs::write(path, text).map_err(|source| VectorizeError::IoFailure {
        path: path.display().to_string(),
        source,
    })
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut field = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    while let Some(c) = chars.next() {
        if quoted {
            if c == '"' {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    field.push('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push(c);
            }
        } else if c == '"' && field.is_empty() {
            quoted = true;
        } else if c == ',' {
            fields.push(std::mem::take(&mut field));
        } else {
            field.push(c);
        }
    }
    fields.push(field);
    fields
}

/// Load a dataset from a CSV produced by `export_csv`. Document ids are
/// synthesized from row numbers (the CSV format does not carry them), and
/// `l2_norm` reflects the stored (already normalized) weights.
pub fn import_csv(path: &Path) -> Result<Dataset, VectorizeError> {
    let text = std::fs::read_to_string(path).map_err(|source| VectorizeError::IoFailure {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(VectorizeError::CsvParse {
        line: 1,
        reason: "missing header".into(),
    })?;
    let mut columns = split_csv_line(header);
    match columns.pop().as_deref() {
        Some("label") => {}
        other => {
            return Err(VectorizeError::CsvParse {
                line: 1,
                reason: format!("last column must be \"label\", got {other:?}"),
            })
        }
    }
    let feature_names = columns;
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    let mut doc_ids = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let mut fields = split_csv_line(line);
        if fields.len() != feature_names.len() + 1 {
            return Err(VectorizeError::CsvParse {
                line: lineno,
                reason: format!(
                    "expected {} fields, got {}",
                    feature_names.len() + 1,
                    fields.len()
                ),
            });
        }
        let label_field = fields.pop().expect("row nonempty");
        let label = Disposition::parse(&label_field).ok_or(VectorizeError::CsvParse {
            line: lineno,
            reason: format!("unknown label {label_field:?}"),
        })?;
        let mut entries = Vec::new();
        for (j, field) in fields.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| VectorizeError::CsvParse {
                line: lineno,
                reason: format!("bad number {field:?}"),
            })?;
            if value != 0.0 {
                entries.push((j, value));
            }
        }
        let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
        vectors.push(FeatureVector {
            entries,
            l2_norm: norm,
        });
        labels.push(label);
        doc_ids.push(format!("row_{:06}", vectors.len() - 1));
    }
    if vectors.is_empty() {
        return Err(VectorizeError::EmptyDataset);
    }
    Ok(Dataset {
        vectors,
        labels,
        feature_names,
        doc_ids,
    })
}
