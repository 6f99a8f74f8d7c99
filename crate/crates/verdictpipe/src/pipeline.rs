//! End-to-end dataset assembly: normalize labeled documents, build the
//! pruned vocabulary, and vectorize — the glue between ingestion and the
//! learners.

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::labeler::{strip_disposition_sentences, Disposition, LabelerConfig};
use crate::textprep::{ngrams, normalize, PrepConfig};
use crate::vectorizer::{build_vocabulary, vectorize, Dataset, VectorizeError, Vocabulary};

/// Feature-extraction settings for dataset construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub prep: PrepConfig,
    pub labeler: LabelerConfig,
    pub min_df_ratio: f64,
    /// When set, sentences matching labeler patterns are removed before
    /// feature extraction, keeping the operative order out of the features.
    pub exclude_disposition_sentences: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            prep: PrepConfig::default(),
            labeler: LabelerConfig::default(),
            min_df_ratio: 0.10,
            exclude_disposition_sentences: false,
        }
    }
}

/// A document ready for feature extraction.
#[derive(Debug, Clone)]
pub struct LabeledDoc {
    pub doc_id: String,
    pub raw_text: String,
    pub label: Disposition,
}

impl LabeledDoc {
    /// The labeled subset of an ingested corpus (unlabeled documents are
    /// excluded from training data by default).
    pub fn from_corpus(corpus: &Corpus) -> Vec<LabeledDoc> {
        corpus
            .documents
            .iter()
            .filter_map(|d| {
                d.label.map(|label| LabeledDoc {
                    doc_id: d.doc_id.clone(),
                    raw_text: d.raw_text.clone(),
                    label,
                })
            })
            .collect()
    }

    /// Wrap generator output, assigning sequential ids.
    pub fn from_synthetic(docs: &[(String, Disposition)]) -> Vec<LabeledDoc> {
        docs.iter()
            .enumerate()
            .map(|(i, (raw_text, label))| LabeledDoc {
                doc_id: format!("case_{i:04}"),
                raw_text: raw_text.clone(),
                label: *label,
            })
            .collect()
    }
}

/// Normalize, build the vocabulary, and vectorize every document.
pub fn build_dataset(
    docs: &[LabeledDoc],
    cfg: &PipelineConfig,
) -> Result<(Dataset, Vocabulary), VectorizeError> {
    if docs.is_empty() {
        return Err(VectorizeError::EmptyDataset);
    }
    let bags: Vec<_> = docs
        .iter()
        .map(|doc| {
            let text = if cfg.exclude_disposition_sentences {
                strip_disposition_sentences(&doc.raw_text, &cfg.labeler)
            } else {
                doc.raw_text.clone()
            };
            let tokens = normalize(&text, &cfg.prep);
            ngrams(&tokens, cfg.prep.ngram_max)
        })
        .collect();
    let vocab = build_vocabulary(&bags, cfg.min_df_ratio)?;
    let vectors = bags.iter().map(|bag| vectorize(bag, &vocab)).collect();
    let dataset = Dataset {
        vectors,
        labels: docs.iter().map(|d| d.label).collect(),
        feature_names: vocab.terms().to_vec(),
        doc_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
    };
    Ok((dataset, vocab))
}
