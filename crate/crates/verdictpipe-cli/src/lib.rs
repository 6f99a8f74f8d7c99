//! Command-line driver for the judgment-outcome prediction pipeline.
//!
//! One binary, one subcommand per pipeline stage: `ingest`, `dataset`,
//! `train`, `evaluate`, `predict`, `watch`, and `synth`. Tuning options
//! resolve as flag > config file > built-in default; the config file is
//! JSON named by `--config` or the `VERDICTPIPE_CONFIG` environment
//! variable.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use verdictpipe::corpus::{extract_text, ingest_directory};
use verdictpipe::eval::{
    classification_report, generate_synthetic_corpus, stratified_split, SynthConfig,
};
use verdictpipe::learners::{train, ModelBundle};
use verdictpipe::pipeline::{build_dataset, LabeledDoc};
use verdictpipe::predictsvc::{now_timestamp, predict_document, watch, WatchConfig};
use verdictpipe::vectorizer::{export_csv, import_csv, Dataset};

pub mod config;
mod sidecar;

pub use config::{FileConfig, Settings};
pub use sidecar::DatasetSidecar;

#[derive(Parser, Debug)]
#[command(
    name = "verdictpipe",
    about = "Judgment-outcome prediction: ingest, label, vectorize, train, evaluate, serve",
    version,
    disable_help_subcommand = true
)]
struct Cli {
    #[command(flatten)]
    overrides: config::FlagOverrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ingest a directory of .txt/.pdf judgments and emit a manifest
    Ingest {
        dir: PathBuf,
        /// Write the manifest here instead of standard output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the labeled TF-IDF dataset (CSV + vocabulary sidecar)
    Dataset {
        dir: PathBuf,
        #[arg(long, default_value = "dataset.csv")]
        out_csv: PathBuf,
        /// Defaults to <out-csv stem>.vocab.json
        #[arg(long)]
        out_vocab: Option<PathBuf>,
    },
    /// Train a classifier from a case directory or an exported CSV
    Train {
        /// Case directory, or a CSV produced by `dataset`
        input: PathBuf,
        /// Where to write the model bundle
        #[arg(long)]
        out: PathBuf,
        /// Vocabulary sidecar (defaults to <csv stem>.vocab.json)
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
    /// Train on an 80/20 split and print the classification report
    Evaluate { dir: PathBuf },
    /// Predict one document with a saved bundle
    Predict {
        file: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Watch a drop directory and serve predictions
    Watch {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long = "in")]
        in_dir: PathBuf,
        #[arg(long = "out")]
        out_dir: PathBuf,
    },
    /// Generate a synthetic labeled corpus
    Synth {
        #[arg(long, value_parser = clap::value_parser!(u64).range(30..))]
        n: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parse arguments and run. Returns the process exit code: 0 on success,
/// 1 on usage errors, 2 on runtime errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            // help/version displays are not usage errors
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let settings = match config::load_and_merge(&cli.overrides) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match dispatch(cli.command, &settings) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(command: Command, settings: &Settings) -> Result<(), String> {
    match command {
        Command::Ingest { dir, out } => cmd_ingest(&dir, out.as_deref(), settings),
        Command::Dataset {
            dir,
            out_csv,
            out_vocab,
        } => cmd_dataset(&dir, &out_csv, out_vocab.as_deref(), settings),
        Command::Train { input, out, vocab } => {
            cmd_train(&input, &out, vocab.as_deref(), settings)
        }
        Command::Evaluate { dir } => cmd_evaluate(&dir, settings),
        Command::Predict { file, bundle } => cmd_predict(&file, &bundle, settings),
        Command::Watch {
            bundle,
            in_dir,
            out_dir,
        } => cmd_watch(&bundle, in_dir, out_dir, settings),
        Command::Synth { n, seed, out } => cmd_synth(n as usize, seed, &out),
    }
}

fn ingest_corpus(dir: &Path, settings: &Settings) -> Result<verdictpipe::corpus::Corpus, String> {
    ingest_directory(dir, &settings.converter, &settings.pipeline.labeler)
        .map_err(|e| e.to_string())
}

fn cmd_ingest(dir: &Path, out: Option<&Path>, settings: &Settings) -> Result<(), String> {
    let corpus = ingest_corpus(dir, settings)?;
    for err in &corpus.errors {
        eprintln!("skipped {}: {}", err.path.display(), err.error);
    }
    eprintln!(
        "ingested {} documents ({} labeled, {} errors) via converter {:?}",
        corpus.documents.len(),
        corpus.labeled_count(),
        corpus.errors.len(),
        corpus.converter_id
    );
    let manifest = corpus.manifest_text();
    match out {
        Some(path) => std::fs::write(path, manifest)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{manifest}"),
    }
    Ok(())
}

fn labeled_docs(dir: &Path, settings: &Settings) -> Result<Vec<LabeledDoc>, String> {
    let corpus = ingest_corpus(dir, settings)?;
    for err in &corpus.errors {
        eprintln!("skipped {}: {}", err.path.display(), err.error);
    }
    let unlabeled = corpus.documents.len() - corpus.labeled_count();
    if unlabeled > 0 {
        eprintln!("excluding {unlabeled} unlabeled documents from the dataset");
    }
    Ok(LabeledDoc::from_corpus(&corpus))
}

fn default_vocab_path(csv: &Path) -> PathBuf {
    csv.with_extension("vocab.json")
}

fn cmd_dataset(
    dir: &Path,
    out_csv: &Path,
    out_vocab: Option<&Path>,
    settings: &Settings,
) -> Result<(), String> {
    let docs = labeled_docs(dir, settings)?;
    let (dataset, vocabulary) =
        build_dataset(&docs, &settings.pipeline).map_err(|e| e.to_string())?;
    export_csv(&dataset, out_csv).map_err(|e| e.to_string())?;
    let vocab_path = out_vocab
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_vocab_path(out_csv));
    let sidecar = DatasetSidecar::new(&settings.pipeline, vocabulary);
    sidecar.save(&vocab_path)?;
    eprintln!(
        "wrote {} ({} docs x {} features) and {}",
        out_csv.display(),
        dataset.len(),
        dataset.n_features(),
        vocab_path.display()
    );
    Ok(())
}

fn load_training_inputs(
    input: &Path,
    vocab: Option<&Path>,
    settings: &Settings,
) -> Result<(Dataset, DatasetSidecar), String> {
    if input.is_dir() {
        let docs = labeled_docs(input, settings)?;
        let (dataset, vocabulary) =
            build_dataset(&docs, &settings.pipeline).map_err(|e| e.to_string())?;
        Ok((dataset, DatasetSidecar::new(&settings.pipeline, vocabulary)))
    } else {
        let dataset = import_csv(input).map_err(|e| e.to_string())?;
        let vocab_path = vocab
            .map(Path::to_path_buf)
            .unwrap_or_else(|| default_vocab_path(input));
        let sidecar = DatasetSidecar::load(&vocab_path)?;
        if dataset.feature_names != sidecar.vocabulary.terms() {
            return Err(format!(
                "csv columns do not match the vocabulary in {}",
                vocab_path.display()
            ));
        }
        Ok((dataset, sidecar))
    }
}

fn cmd_train(
    input: &Path,
    out: &Path,
    vocab: Option<&Path>,
    settings: &Settings,
) -> Result<(), String> {
    let (dataset, sidecar) = load_training_inputs(input, vocab, settings)?;
    let model = train(&dataset, &settings.learner).map_err(|e| e.to_string())?;
    eprintln!(
        "trained {} on {} docs x {} features; final training loss {:.6}",
        settings.learner.kind.as_str(),
        dataset.len(),
        dataset.n_features(),
        model.training_meta.final_training_loss
    );
    let bundle = ModelBundle::new(
        sidecar.prep_config,
        sidecar.labeler_config,
        sidecar.vocabulary,
        model,
    );
    bundle.save(out).map_err(|e| e.to_string())?;
    eprintln!("wrote bundle {} ({})", out.display(), bundle.fingerprint());
    Ok(())
}

fn cmd_evaluate(dir: &Path, settings: &Settings) -> Result<(), String> {
    let docs = labeled_docs(dir, settings)?;
    let (dataset, _) = build_dataset(&docs, &settings.pipeline).map_err(|e| e.to_string())?;
    let (train_ds, test_ds) =
        stratified_split(&dataset, &settings.split).map_err(|e| e.to_string())?;
    let model = train(&train_ds, &settings.learner).map_err(|e| e.to_string())?;
    let y_pred: Vec<_> = test_ds.vectors.iter().map(|v| model.predict(v)).collect();
    let report = classification_report(&test_ds.labels, &y_pred).map_err(|e| e.to_string())?;
    print!("{}", report.render_table());
    println!();
    print!("{}", report.confusion.counts_csv());
    println!();
    print!("{}", report.confusion.normalized_csv());
    Ok(())
}

fn cmd_predict(file: &Path, bundle_path: &Path, settings: &Settings) -> Result<(), String> {
    let bundle = ModelBundle::load(bundle_path).map_err(|e| e.to_string())?;
    let text = extract_text(file, &settings.converter).map_err(|e| e.to_string())?;
    let doc_id = verdictpipe::corpus::doc_id_for_path(file);
    let prediction = predict_document(&bundle, &doc_id, &text).map_err(|e| e.to_string())?;
    print!("{}", prediction.render(&now_timestamp()));
    Ok(())
}

fn cmd_watch(
    bundle_path: &Path,
    in_dir: PathBuf,
    out_dir: PathBuf,
    settings: &Settings,
) -> Result<(), String> {
    let bundle = ModelBundle::load(bundle_path).map_err(|e| e.to_string())?;
    let cfg = WatchConfig {
        in_dir,
        out_dir,
        poll_interval: settings.poll_interval,
        stability_window: settings.stability_window,
        extensions: vec!["txt".into(), "pdf".into()],
        converter: settings.converter.clone(),
    };
    eprintln!(
        "watching {} -> {} (poll {:?}, stability {:?})",
        cfg.in_dir.display(),
        cfg.out_dir.display(),
        cfg.poll_interval,
        cfg.stability_window
    );
    watch(&bundle, &cfg).map_err(|e| e.to_string())
}

fn cmd_synth(n: usize, seed: u64, out: &Path) -> Result<(), String> {
    std::fs::create_dir_all(out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
    let docs = generate_synthetic_corpus(n, seed, &SynthConfig::default());
    for (i, (text, _)) in docs.iter().enumerate() {
        let path = out.join(format!("case_{i:04}.txt"));
        std::fs::write(&path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    eprintln!("wrote {n} synthetic cases to {}", out.display());
    Ok(())
}
