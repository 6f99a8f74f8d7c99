//! Configuration resolution: built-in defaults, overridden by an optional
//! JSON config file, overridden by command-line flags.
//!
//! Unknown config-file keys are fatal. The config file path comes from
//! `--config` or the `VERDICTPIPE_CONFIG` environment variable.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::Args;
use serde::{Deserialize, Serialize};

use verdictpipe::corpus::ConverterConfig;
use verdictpipe::eval::SplitConfig;
use verdictpipe::labeler::LabelerConfig;
use verdictpipe::learners::{LearnerKind, LearnerSpec};
use verdictpipe::pipeline::PipelineConfig;
use verdictpipe::textprep::{PrepConfig, StemmerKind};

pub const CONFIG_ENV_VAR: &str = "VERDICTPIPE_CONFIG";

/// Optional values from the JSON config file. Every field mirrors a flag;
/// unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub min_token_len: Option<usize>,
    pub ngram_max: Option<usize>,
    /// "porter" or "none"
    pub stemmer: Option<String>,
    pub stopwords_file: Option<PathBuf>,
    pub tail_sentences: Option<usize>,
    pub patterns_file: Option<PathBuf>,
    pub min_df_ratio: Option<f64>,
    /// "gbt", "rf", "svm", or "mlp"
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub hyper: Option<BTreeMap<String, String>>,
    pub test_ratio: Option<f64>,
    pub split_seed: Option<u64>,
    pub poll_interval_ms: Option<u64>,
    pub stability_window_ms: Option<u64>,
    pub converter: Option<String>,
    pub exclude_disposition_sentences: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }
}

/// Command-line overrides shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct FlagOverrides {
    /// JSON config file (default: $VERDICTPIPE_CONFIG if set)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Drop tokens shorter than this many characters
    #[arg(long, global = true)]
    pub min_token_len: Option<usize>,

    /// Maximum n-gram order (1-4)
    #[arg(long, global = true)]
    pub ngram_max: Option<usize>,

    /// Stemmer: porter or none
    #[arg(long, global = true)]
    pub stemmer: Option<String>,

    /// Stopword list file, one lowercase word per line
    #[arg(long, global = true)]
    pub stopwords_file: Option<PathBuf>,

    /// Trailing sentences the labeler scans
    #[arg(long, global = true)]
    pub tail_sentences: Option<usize>,

    /// Labeler pattern file: label<TAB>pattern per line
    #[arg(long, global = true)]
    pub patterns_file: Option<PathBuf>,

    /// Minimum document-frequency ratio for vocabulary terms
    #[arg(long = "min-df", global = true)]
    pub min_df_ratio: Option<f64>,

    /// Classifier family: gbt, rf, svm, or mlp
    #[arg(long, global = true)]
    pub model: Option<String>,

    /// Training seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Hyperparameter override, repeatable (key=value)
    #[arg(long = "hyper", global = true, value_name = "KEY=VALUE")]
    pub hyper: Vec<String>,

    /// Test fraction for evaluation splits
    #[arg(long, global = true)]
    pub test_ratio: Option<f64>,

    /// Seed for the train/test split
    #[arg(long, global = true)]
    pub split_seed: Option<u64>,

    /// Watch-service poll interval in milliseconds
    #[arg(long, global = true)]
    pub poll_interval_ms: Option<u64>,

    /// Watch-service size-stability window in milliseconds
    #[arg(long = "stability-ms", global = true)]
    pub stability_window_ms: Option<u64>,

    /// PDF converter command template with an {input} placeholder
    #[arg(long, global = true)]
    pub converter: Option<String>,

    /// Exclude disposition sentences from features (true/false)
    #[arg(long = "exclude-disposition", global = true, value_name = "BOOL")]
    pub exclude_disposition_sentences: Option<bool>,
}

/// Fully resolved runtime settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub pipeline: PipelineConfig,
    pub learner: LearnerSpec,
    pub split: SplitConfig,
    pub converter: ConverterConfig,
    pub poll_interval: Duration,
    pub stability_window: Duration,
}

fn parse_stemmer(name: &str) -> Result<StemmerKind, String> {
    match name {
        "porter" => Ok(StemmerKind::Porter),
        "none" => Ok(StemmerKind::None),
        other => Err(format!("unknown stemmer {other:?} (expected porter|none)")),
    }
}

fn parse_model(name: &str) -> Result<LearnerKind, String> {
    LearnerKind::parse(name)
        .ok_or_else(|| format!("unknown model {name:?} (expected gbt|rf|svm|mlp)"))
}

fn load_stopwords(path: &Path) -> Result<std::collections::BTreeSet<String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read stopwords {}: {e}", path.display()))?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect())
}

fn parse_hyper_pairs(pairs: &[String]) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for pair in pairs {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| format!("bad --hyper {pair:?} (expected key=value)"))?;
        map.insert(key.to_string(), value.to_string());
    }
    Ok(map)
}

/// Resolve settings as flag > config file > default.
pub fn merge_settings(file: &FileConfig, flags: &FlagOverrides) -> Result<Settings, String> {
    let mut prep = PrepConfig::default();
    if let Some(v) = flags.min_token_len.or(file.min_token_len) {
        prep.min_token_len = v;
    }
    if let Some(v) = flags.ngram_max.or(file.ngram_max) {
        prep.ngram_max = v;
    }
    if let Some(name) = flags.stemmer.as_deref().or(file.stemmer.as_deref()) {
        prep.stemmer = parse_stemmer(name)?;
    }
    if let Some(path) = flags
        .stopwords_file
        .as_deref()
        .or(file.stopwords_file.as_deref())
    {
        prep.stopwords = load_stopwords(path)?;
    }
    prep.validate()?;

    let tail = flags
        .tail_sentences
        .or(file.tail_sentences)
        .unwrap_or_else(|| LabelerConfig::default().tail_sentences);
    let labeler = match flags
        .patterns_file
        .as_deref()
        .or(file.patterns_file.as_deref())
    {
        Some(path) => {
            LabelerConfig::from_pattern_file(path, tail).map_err(|e| e.to_string())?
        }
        None => LabelerConfig {
            tail_sentences: tail,
            ..LabelerConfig::default()
        },
    };

    let min_df_ratio = flags.min_df_ratio.or(file.min_df_ratio).unwrap_or(0.10);
    if !(min_df_ratio > 0.0 && min_df_ratio <= 1.0) {
        return Err(format!("min_df_ratio {min_df_ratio} must be in (0, 1]"));
    }
    let exclude = flags
        .exclude_disposition_sentences
        .or(file.exclude_disposition_sentences)
        .unwrap_or(false);

    let kind = match flags.model.as_deref().or(file.model.as_deref()) {
        Some(name) => parse_model(name)?,
        None => LearnerKind::Gbt,
    };
    let mut hyper = file.hyper.clone().unwrap_or_default();
    hyper.extend(parse_hyper_pairs(&flags.hyper)?);
    let learner = LearnerSpec {
        kind,
        hyper,
        seed: flags.seed.or(file.seed).unwrap_or(42),
    };
    learner.validate().map_err(|e| e.to_string())?;

    let test_ratio = flags.test_ratio.or(file.test_ratio).unwrap_or(0.20);
    if !(test_ratio > 0.0 && test_ratio < 1.0) {
        return Err(format!("test_ratio {test_ratio} must be in (0, 1)"));
    }
    let split = SplitConfig {
        test_ratio,
        seed: flags.split_seed.or(file.split_seed).unwrap_or(42),
    };

    let converter = ConverterConfig::new(
        flags
            .converter
            .as_deref()
            .or(file.converter.as_deref())
            .unwrap_or(&ConverterConfig::default().command_template),
    );
    let poll_interval = Duration::from_millis(
        flags
            .poll_interval_ms
            .or(file.poll_interval_ms)
            .unwrap_or(1000),
    );
    let stability_window = Duration::from_millis(
        flags
            .stability_window_ms
            .or(file.stability_window_ms)
            .unwrap_or(2000),
    );

    Ok(Settings {
        pipeline: PipelineConfig {
            prep,
            labeler,
            min_df_ratio,
            exclude_disposition_sentences: exclude,
        },
        learner,
        split,
        converter,
        poll_interval,
        stability_window,
    })
}

/// Load the config file (if named) and merge with the flags.
pub fn load_and_merge(flags: &FlagOverrides) -> Result<Settings, String> {
    let config_path = flags
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from));
    let file = match config_path {
        Some(path) => FileConfig::load(&path)?,
        None => FileConfig::default(),
    };
    merge_settings(&file, flags)
}
