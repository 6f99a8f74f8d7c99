//! Shared test support: an independent naive TF-IDF oracle and random
//! corpus generation for comparing against the production pipeline.

use std::collections::BTreeMap;

use verdictpipe::rng::DetRng;
use verdictpipe::textprep::NgramBag;

/// Dense TF-IDF vectors computed from scratch: recount document
/// frequencies, recompute idf and L2 normalization directly from the bags,
/// independent of the vectorizer's code path.
pub struct NaiveTfidf {
    pub terms: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn naive_tfidf(bags: &[NgramBag], min_df_ratio: f64) -> NaiveTfidf {
    let n = bags.len();
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for bag in bags {
        for term in bag.counts().keys() {
            *df.entry(term.clone()).or_insert(0) += 1;
        }
    }
    let threshold = (min_df_ratio * n as f64).ceil().max(1.0) as usize;
    let terms: Vec<String> = df
        .iter()
        .filter(|(_, &count)| count >= threshold)
        .map(|(t, _)| t.clone())
        .collect();
    let idf: Vec<f64> = terms
        .iter()
        .map(|t| ((1.0 + n as f64) / (1.0 + df[t] as f64)).ln() + 1.0)
        .collect();
    let vectors = bags
        .iter()
        .map(|bag| {
            let mut dense: Vec<f64> = terms
                .iter()
                .zip(&idf)
                .map(|(t, &w)| bag.counts().get(t).copied().unwrap_or(0) as f64 * w)
                .collect();
            let norm = dense.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                for x in dense.iter_mut() {
                    *x /= norm;
                }
            }
            dense
        })
        .collect();
    NaiveTfidf { terms, vectors }
}

/// Random word-soup corpus over a small vocabulary; every document shares
/// one anchor token so the pruned vocabulary is never empty.
pub fn random_corpus(rng: &mut DetRng, max_docs: usize, max_tokens: usize) -> Vec<Vec<String>> {
    let n_docs = 2 + rng.gen_range(max_docs.saturating_sub(1).max(1));
    (0..n_docs)
        .map(|_| {
            let len = 1 + rng.gen_range(max_tokens.max(1));
            let mut tokens = vec!["anchor".to_string()];
            for _ in 0..len {
                tokens.push(format!("word{}", rng.gen_range(30)));
            }
            tokens
        })
        .collect()
}
