//! The drop-directory prediction service.
//!
//! `predict_document` runs the frozen pipeline of a saved bundle over raw
//! text and attaches a top-feature explanation. `watch` polls an input
//! directory, processes each file exactly once (per filename, persisted
//! across restarts), and writes one prediction or error file per input.

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::corpus::{doc_id_for_path, extract_text, ConverterConfig};
use crate::labeler::Disposition;
use crate::learners::{ModelBundle, ModelParams, TrainedModel, N_CLASSES};
use crate::textprep::{ngrams, normalize};
use crate::vectorizer::{vectorize, FeatureVector};

const EXPLANATION_SIZE: usize = 10;

/// RFC 3339 timestamp used in prediction files.
pub fn now_timestamp() -> String {
    chrono::Utc::now().to_rfc3339()
}

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("empty document")]
    EmptyDocument,
}

#[derive(Debug, Error)]
pub enum WatchError {
    #[error("watch directories must differ (got {0})")]
    SameDirectory(PathBuf),
    #[error("directory {path} is not usable: {reason}")]
    BadDirectory { path: PathBuf, reason: String },
    #[error("cannot persist processed ledger {path}: {source}")]
    LedgerWrite {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// A scored document with its explanation.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub doc_id: String,
    pub predicted: Disposition,
    pub probabilities: [f64; N_CLASSES],
    /// (term, signed contribution), sorted by |contribution| descending.
    pub explanation: Vec<(String, f64)>,
    pub pipeline_fingerprint: String,
    /// All tokens fell outside the vocabulary; the prediction reflects
    /// model base rates only.
    pub empty_vector: bool,
}

impl Prediction {
    /// The simple text format emitted by the watch service.
    pub fn render(&self, timestamp: &str) -> String {
        let mut out = String::new();
        out.push_str(&format!("doc: {}\n", self.doc_id));
        out.push_str(&format!("timestamp: {timestamp}\n"));
        out.push_str(&format!("pipeline: {}\n", self.pipeline_fingerprint));
        out.push_str(&format!("predicted: {}\n", self.predicted));
        for class in Disposition::ALL {
            out.push_str(&format!(
                "p({})={:.6}\n",
                class,
                self.probabilities[class.index()]
            ));
        }
        if self.empty_vector {
            out.push_str("warning: no known terms in document; base-rate prediction\n");
        }
        out.push_str("top features:\n");
        for (term, contribution) in &self.explanation {
            out.push_str(&format!("  {term}  {contribution:+.6}\n"));
        }
        out
    }
}

/// Per-feature attribution of the predicted class's score.
///
/// Tree families attribute the value change along each decision path to
/// the split feature; the linear model uses weight*value; the network uses
/// input-gradient*value. Returns the top `k` by |contribution| (ties
/// broken by term), omitting zero contributions.
pub fn explain(
    model: &TrainedModel,
    v: &FeatureVector,
    k: usize,
    terms: &[String],
) -> Vec<(String, f64)> {
    assert!(k >= 1, "explanation size must be at least 1");
    let class = model
        .predict_proba(v)
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("three classes");
    let mut contributions: Vec<f64> = vec![0.0; terms.len()];
    match &model.params {
        ModelParams::Gbt(m) => {
            for round in &m.rounds {
                let tree = &round[class];
                let mut i = 0usize;
                loop {
                    let node = &tree.nodes[i];
                    if node.is_leaf() {
                        break;
                    }
                    let next = if v.get(node.feature as usize) <= node.threshold {
                        node.left as usize
                    } else {
                        node.right as usize
                    };
                    let delta = tree.nodes[next].value - node.value;
                    contributions[node.feature as usize] += m.learning_rate * delta;
                    i = next;
                }
            }
        }
        ModelParams::Forest(m) => {
            let scale = 1.0 / m.trees.len() as f64;
            for tree in &m.trees {
                let mut i = 0usize;
                loop {
                    let node = &tree.nodes[i];
                    if node.is_leaf() {
                        break;
                    }
                    let next = if v.get(node.feature as usize) <= node.threshold {
                        node.left as usize
                    } else {
                        node.right as usize
                    };
                    let delta = tree.nodes[next].dist[class] - node.dist[class];
                    contributions[node.feature as usize] += scale * delta;
                    i = next;
                }
            }
        }
        ModelParams::Linear(m) => {
            for &(i, x) in &v.entries {
                contributions[i] = m.weights[class][i] * x;
            }
        }
        ModelParams::Mlp(m) => {
            for (i, g) in m.input_gradient(v, class) {
                contributions[i] = g * v.get(i);
            }
        }
    }
    let mut scored: Vec<(String, f64)> = contributions
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c != 0.0)
        .map(|(i, c)| (terms[i].clone(), c))
        .collect();
    scored.sort_by(|a, b| {
        b.1.abs()
            .total_cmp(&a.1.abs())
            .then_with(|| a.0.cmp(&b.0))
    });
    scored.truncate(k);
    scored
}

/// Run the bundle's frozen pipeline over raw text.
pub fn predict_document(
    bundle: &ModelBundle,
    doc_id: &str,
    raw_text: &str,
) -> Result<Prediction, PredictError> {
    if raw_text.trim().is_empty() {
        return Err(PredictError::EmptyDocument);
    }
    let tokens = normalize(raw_text, &bundle.prep_config);
    let bag = ngrams(&tokens, bundle.prep_config.ngram_max);
    let v = vectorize(&bag, &bundle.vocabulary);
    let probabilities = bundle.model.predict_proba(&v);
    let predicted = bundle.model.predict(&v);
    let explanation = if v.is_empty() {
        Vec::new()
    } else {
        explain(
            &bundle.model,
            &v,
            EXPLANATION_SIZE,
            bundle.vocabulary.terms(),
        )
    };
    Ok(Prediction {
        doc_id: doc_id.to_string(),
        predicted,
        probabilities,
        explanation,
        pipeline_fingerprint: bundle.fingerprint(),
        empty_vector: v.is_empty(),
    })
}

/// Watch-service settings. `in_dir` and `out_dir` must differ; inputs are
/// picked up once their size is stable across `stability_window`.
#[derive(Debug, Clone)]
pub struct WatchConfig {
    pub in_dir: PathBuf,
    pub out_dir: PathBuf,
    pub poll_interval: Duration,
    pub stability_window: Duration,
    pub extensions: Vec<String>,
    pub converter: ConverterConfig,
}

impl WatchConfig {
    pub fn new(in_dir: PathBuf, out_dir: PathBuf) -> Self {
        WatchConfig {
            in_dir,
            out_dir,
            poll_interval: Duration::from_secs(1),
            stability_window: Duration::from_secs(2),
            extensions: vec!["txt".to_string(), "pdf".to_string()],
            converter: ConverterConfig::default(),
        }
    }
}

const LEDGER_FILE: &str = "processed.list";

struct WatchState {
    processed: HashSet<String>,
    ledger_path: PathBuf,
    /// size and first-seen time of not-yet-stable candidates
    pending: std::collections::HashMap<PathBuf, (u64, Instant)>,
}

impl WatchState {
    fn load(out_dir: &Path) -> Result<Self, WatchError> {
        let ledger_path = out_dir.join(LEDGER_FILE);
        let processed = match std::fs::read_to_string(&ledger_path) {
            Ok(text) => text.lines().map(|l| l.trim().to_string()).collect(),
            Err(_) => HashSet::new(),
        };
        Ok(WatchState {
            processed,
            ledger_path,
            pending: Default::default(),
        })
    }

    fn mark_processed(&mut self, doc_id: &str) -> Result<(), WatchError> {
        self.processed.insert(doc_id.to_string());
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.ledger_path)
            .map_err(|source| WatchError::LedgerWrite {
                path: self.ledger_path.clone(),
                source,
            })?;
        writeln!(file, "{doc_id}").map_err(|source| WatchError::LedgerWrite {
            path: self.ledger_path.clone(),
            source,
        })
    }
}

fn check_dir(path: &Path) -> Result<(), WatchError> {
    if !path.is_dir() {
        return Err(WatchError::BadDirectory {
            path: path.to_path_buf(),
            reason: "not a directory".into(),
        });
    }
    Ok(())
}

fn process_file(bundle: &ModelBundle, cfg: &WatchConfig, path: &Path, doc_id: &str) {
    let outcome = extract_text(path, &cfg.converter)
        .map_err(|e| (e.name().to_string(), e.to_string()))
        .and_then(|text| {
            predict_document(bundle, doc_id, &text)
                .map_err(|e| ("EmptyDocument".to_string(), e.to_string()))
        });
    match outcome {
        Ok(prediction) => {
            let rendered = prediction.render(&now_timestamp());
            let out = cfg.out_dir.join(format!("{doc_id}.prediction.txt"));
            if let Err(e) = std::fs::write(&out, rendered) {
                eprintln!("failed to write {}: {e}", out.display());
            }
        }
        Err((name, message)) => {
            let out = cfg.out_dir.join(format!("{doc_id}.error.txt"));
            if let Err(e) = std::fs::write(&out, format!("{name}: {message}\n")) {
                eprintln!("failed to write {}: {e}", out.display());
            }
        }
    }
}

fn poll_once(bundle: &ModelBundle, cfg: &WatchConfig, state: &mut WatchState) {
    let entries = match std::fs::read_dir(&cfg.in_dir) {
        Ok(entries) => entries,
        Err(e) => {
            eprintln!("cannot read {}: {e}", cfg.in_dir.display());
            return;
        }
    };
    let mut candidates: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .map(|e| {
                        let ext = e.to_string_lossy().to_lowercase();
                        cfg.extensions.contains(&ext)
                    })
                    .unwrap_or(false)
        })
        .collect();
    candidates.sort();
    for path in candidates {
        let doc_id = doc_id_for_path(&path);
        if state.processed.contains(&doc_id) {
            continue;
        }
        let size = match std::fs::metadata(&path) {
            Ok(m) => m.len(),
            Err(_) => continue, // vanished between listing and stat
        };
        let now = Instant::now();
        let stable = match state.pending.get(&path) {
            Some(&(seen_size, since)) if seen_size == size => {
                now.duration_since(since) >= cfg.stability_window
            }
            _ => {
                state.pending.insert(path.clone(), (size, now));
                cfg.stability_window.is_zero()
            }
        };
        if !stable {
            continue;
        }
        state.pending.remove(&path);
        process_file(bundle, cfg, &path, &doc_id);
        if let Err(e) = state.mark_processed(&doc_id) {
            eprintln!("{e}");
        }
    }
}

/// Poll `in_dir` until `stop` is raised, writing one
/// `<doc_id>.prediction.txt` or `<doc_id>.error.txt` per input file.
/// Already-processed filenames (per the `processed.list` ledger in
/// `out_dir`) are skipped, including across restarts.
pub fn watch_until(
    bundle: &ModelBundle,
    cfg: &WatchConfig,
    stop: &AtomicBool,
) -> Result<(), WatchError> {
    if cfg.in_dir == cfg.out_dir {
        return Err(WatchError::SameDirectory(cfg.in_dir.clone()));
    }
    check_dir(&cfg.in_dir)?;
    check_dir(&cfg.out_dir)?;
    let mut state = WatchState::load(&cfg.out_dir)?;
    while !stop.load(Ordering::Relaxed) {
        poll_once(bundle, cfg, &mut state);
        std::thread::sleep(cfg.poll_interval);
    }
    Ok(())
}

/// Run the watch loop until the process is terminated.
pub fn watch(bundle: &ModelBundle, cfg: &WatchConfig) -> Result<(), WatchError> {
    let never = AtomicBool::new(false);
    watch_until(bundle, cfg, &never)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{generate_synthetic_corpus, SynthConfig};
    use crate::labeler::LabelerConfig;
    use crate::learners::{train, LearnerKind, LearnerSpec};
    use crate::pipeline::{build_dataset, LabeledDoc, PipelineConfig};
    use crate::textprep::PrepConfig;

    fn synth_bundle(kind: LearnerKind) -> ModelBundle {
        let docs = LabeledDoc::from_synthetic(&generate_synthetic_corpus(
            60,
            11,
            &SynthConfig::default(),
        ));
        // train without the operative-order sentences so predictions rest
        // on transferable vocabulary rather than the label leak
        let cfg = PipelineConfig {
            exclude_disposition_sentences: true,
            ..PipelineConfig::default()
        };
        let (ds, vocab) = build_dataset(&docs, &cfg).unwrap();
        let spec = LearnerSpec::new(kind, 4).set(
            match kind {
                LearnerKind::Gbt => "rounds",
                LearnerKind::RandomForest => "trees",
                _ => "epochs",
            },
            "20",
        );
        let model = train(&ds, &spec).unwrap();
        ModelBundle::new(PrepConfig::default(), LabelerConfig::default(), vocab, model)
    }

    #[test]
    fn predict_document_matches_ground_truth() {
        let bundle = synth_bundle(LearnerKind::Gbt);
        let fresh = generate_synthetic_corpus(33, 999, &SynthConfig::default());
        let mut correct = 0;
        for (text, truth) in &fresh {
            let p = predict_document(&bundle, "t", text).unwrap();
            if p.predicted == *truth {
                correct += 1;
            }
        }
        assert!(correct >= 30, "only {correct}/33 correct");
    }

    #[test]
    fn predictions_are_deterministic() {
        let bundle = synth_bundle(LearnerKind::Gbt);
        let text = "The record reflects rejection and futile arguments. \
                    The appeal is dismissed.";
        let a = predict_document(&bundle, "x", text).unwrap();
        let b = predict_document(&bundle, "x", text).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.render("T"), b.render("T"));
    }

    #[test]
    fn empty_document_is_an_error() {
        let bundle = synth_bundle(LearnerKind::Gbt);
        assert!(matches!(
            predict_document(&bundle, "x", "  \n"),
            Err(PredictError::EmptyDocument)
        ));
    }

    #[test]
    fn out_of_vocabulary_document_is_flagged() {
        let bundle = synth_bundle(LearnerKind::Gbt);
        let p = predict_document(&bundle, "x", "zzz qqq xxyyzz unknownwords").unwrap();
        assert!(p.empty_vector);
        assert!(p.explanation.is_empty());
        assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p.render("T").contains("warning:"));
    }

    #[test]
    fn linear_explanation_is_weight_times_value() {
        let bundle = synth_bundle(LearnerKind::LinearSvm);
        let text = "The record reflects rejection and futile arguments throughout.";
        let p = predict_document(&bundle, "x", text).unwrap();
        assert!(!p.explanation.is_empty());
        // completeness: contributions sum to score minus bias
        let tokens = normalize(text, &bundle.prep_config);
        let bag = ngrams(&tokens, bundle.prep_config.ngram_max);
        let v = vectorize(&bag, &bundle.vocabulary);
        let ModelParams::Linear(m) = &bundle.model.params else {
            unreachable!()
        };
        let class = p.predicted.index();
        let full = explain(&bundle.model, &v, usize::MAX, bundle.vocabulary.terms());
        let total: f64 = full.iter().map(|(_, c)| c).sum();
        let margin = m.margins(&v)[class] - m.bias[class];
        assert!((total - margin).abs() < 1e-9);
    }

    #[test]
    fn explanation_k_truncates_without_padding() {
        let bundle = synth_bundle(LearnerKind::LinearSvm);
        let text = "Questions of rejection weighed with the court.";
        let tokens = normalize(text, &bundle.prep_config);
        let bag = ngrams(&tokens, bundle.prep_config.ngram_max);
        let v = vectorize(&bag, &bundle.vocabulary);
        let nonzero = explain(&bundle.model, &v, usize::MAX, bundle.vocabulary.terms()).len();
        let wide = explain(&bundle.model, &v, nonzero + 50, bundle.vocabulary.terms());
        assert_eq!(wide.len(), nonzero);
        let narrow = explain(&bundle.model, &v, 2, bundle.vocabulary.terms());
        assert_eq!(narrow.len(), 2.min(nonzero));
        // sorted by |contribution| descending
        for w in wide.windows(2) {
            assert!(w[0].1.abs() >= w[1].1.abs());
        }
    }

    #[test]
    fn watch_processes_each_file_once() {
        let tmp = tempfile::tempdir().unwrap();
        let in_dir = tmp.path().join("in");
        let out_dir = tmp.path().join("out");
        std::fs::create_dir(&in_dir).unwrap();
        std::fs::create_dir(&out_dir).unwrap();
        let bundle = synth_bundle(LearnerKind::Gbt);
        let docs = generate_synthetic_corpus(33, 555, &SynthConfig::default());
        std::fs::write(in_dir.join("one.txt"), &docs[0].0).unwrap();
        std::fs::write(in_dir.join("two.txt"), &docs[1].0).unwrap();
        std::fs::write(in_dir.join("broken.txt"), "").unwrap();
        std::fs::write(in_dir.join("ignored.md"), "not a case").unwrap();

        let mut cfg = WatchConfig::new(in_dir.clone(), out_dir.clone());
        cfg.poll_interval = Duration::from_millis(20);
        cfg.stability_window = Duration::from_millis(40);

        let stop = std::sync::Arc::new(AtomicBool::new(false));
        let handle = {
            let bundle = bundle.clone();
            let cfg = cfg.clone();
            let stop = stop.clone();
            std::thread::spawn(move || watch_until(&bundle, &cfg, &stop))
        };
        let deadline = Instant::now() + Duration::from_secs(10);
        loop {
            let done = out_dir.join("one.prediction.txt").exists()
                && out_dir.join("two.prediction.txt").exists()
                && out_dir.join("broken.error.txt").exists();
            if done || Instant::now() > deadline {
                break;
            }
            std::thread::sleep(Duration::from_millis(20));
        }
        stop.store(true, Ordering::Relaxed);
        handle.join().unwrap().unwrap();

        assert!(out_dir.join("one.prediction.txt").exists());
        assert!(out_dir.join("two.prediction.txt").exists());
        assert!(out_dir.join("broken.error.txt").exists());
        assert!(!out_dir.join("ignored.prediction.txt").exists());
        let ledger = std::fs::read_to_string(out_dir.join(LEDGER_FILE)).unwrap();
        assert_eq!(ledger.lines().count(), 3);

        // restart: the ledger prevents reprocessing
        let one = out_dir.join("one.prediction.txt");
        let before = std::fs::metadata(&one).unwrap().modified().unwrap();
        let mut state = WatchState::load(&cfg.out_dir).unwrap();
        assert_eq!(state.processed.len(), 3);
        for _ in 0..3 {
            poll_once(&bundle, &cfg, &mut state);
            std::thread::sleep(Duration::from_millis(30));
        }
        let after = std::fs::metadata(&one).unwrap().modified().unwrap();
        assert_eq!(before, after, "prediction file was rewritten on restart");
        let ledger = std::fs::read_to_string(out_dir.join(LEDGER_FILE)).unwrap();
        assert_eq!(ledger.lines().count(), 3);
    }

    #[test]
    fn single_stump_explanation_is_the_leaf_delta() {
        use crate::learners::{
            GbtModel, LearnerKind, ModelParams, RegNode, RegTree, TrainedModel, TrainingMeta,
        };
        let stump = RegTree {
            nodes: vec![
                RegNode {
                    feature: 1,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                    value: 0.1,
                },
                RegNode {
                    feature: 0,
                    threshold: 0.0,
                    left: -1,
                    right: -1,
                    value: -0.4,
                },
                RegNode {
                    feature: 0,
                    threshold: 0.0,
                    left: -1,
                    right: -1,
                    value: 0.9,
                },
            ],
        };
        let leaf_only = |value: f64| RegTree {
            nodes: vec![RegNode {
                feature: 0,
                threshold: 0.0,
                left: -1,
                right: -1,
                value,
            }],
        };
        let model = TrainedModel {
            kind: LearnerKind::Gbt,
            class_names: Disposition::ALL.iter().map(|d| d.as_str().to_string()).collect(),
            n_features: 3,
            params: ModelParams::Gbt(GbtModel {
                // class 0 dominates so the stump's class is the predicted one
                base_scores: [5.0, 0.0, 0.0],
                learning_rate: 1.0,
                rounds: vec![vec![stump, leaf_only(0.0), leaf_only(0.0)]],
            }),
            training_meta: TrainingMeta {
                rounds_run: 1,
                final_training_loss: 0.0,
                loss_curve: vec![0.0],
            },
        };
        let v = FeatureVector {
            entries: vec![(1, 0.9)],
            l2_norm: 1.0,
        };
        let terms: Vec<String> = ["alpha", "beta", "gamma"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let explanation = explain(&model, &v, 10, &terms);
        // one split on feature 1: contribution = right leaf minus root value
        assert_eq!(explanation, vec![("beta".to_string(), 0.9 - 0.1)]);
    }

    #[test]
    fn linear_explanation_matches_hand_arithmetic() {
        use crate::learners::{
            LearnerKind, LinearModel, ModelParams, TrainedModel, TrainingMeta,
        };
        let model = TrainedModel {
            kind: LearnerKind::LinearSvm,
            class_names: Disposition::ALL.iter().map(|d| d.as_str().to_string()).collect(),
            n_features: 3,
            params: ModelParams::Linear(LinearModel {
                weights: vec![
                    vec![2.0, -1.0, 0.5],
                    vec![0.0, 0.0, 0.0],
                    vec![-2.0, 1.0, -0.5],
                ],
                bias: vec![0.0, -10.0, -10.0],
            }),
            training_meta: TrainingMeta {
                rounds_run: 0,
                final_training_loss: 0.0,
                loss_curve: vec![],
            },
        };
        let v = FeatureVector {
            entries: vec![(0, 0.5), (1, 0.25), (2, 0.8)],
            l2_norm: 1.0,
        };
        let terms: Vec<String> = ["alpha", "beta", "gamma"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        // predicted class is 0; contributions are weight * value:
        // alpha: 2.0*0.5 = 1.0, beta: -1.0*0.25 = -0.25, gamma: 0.5*0.8 = 0.4
        let explanation = explain(&model, &v, 10, &terms);
        assert_eq!(
            explanation,
            vec![
                ("alpha".to_string(), 1.0),
                ("gamma".to_string(), 0.4),
                ("beta".to_string(), -0.25),
            ]
        );
        // k truncates to the top entries by |contribution|
        assert_eq!(explain(&model, &v, 1, &terms), vec![("alpha".to_string(), 1.0)]);
    }

    #[test]
    fn watch_rejects_same_dir() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = WatchConfig::new(tmp.path().to_path_buf(), tmp.path().to_path_buf());
        let bundle = synth_bundle(LearnerKind::Gbt);
        let stop = AtomicBool::new(true);
        assert!(matches!(
            watch_until(&bundle, &cfg, &stop),
            Err(WatchError::SameDirectory(_))
        ));
    }
}
