//! Property test: effective settings resolve as flag > config file >
//! built-in default, field by field.

use proptest::prelude::*;

use verdictpipe_cli::config::{merge_settings, FileConfig, FlagOverrides};

#[derive(Debug, Clone)]
struct Layered<T> {
    file: Option<T>,
    flag: Option<T>,
}

impl<T: Copy> Layered<T> {
    fn effective(&self, default: T) -> T {
        self.flag.or(self.file).unwrap_or(default)
    }
}

fn layered<T: Clone + std::fmt::Debug>(
    values: impl Strategy<Value = T> + Clone,
) -> impl Strategy<Value = Layered<T>> {
    (
        proptest::option::of(values.clone()),
        proptest::option::of(values),
    )
        .prop_map(|(file, flag)| Layered { file, flag })
}

proptest! {
    #[test]
    fn flag_beats_file_beats_default(
        min_token_len in layered(1usize..6),
        ngram_max in layered(1usize..=4),
        tail_sentences in layered(1usize..40),
        min_df_pct in layered(1u32..=100),
        seed in layered(0u64..1000),
        split_seed in layered(0u64..1000),
        test_ratio_pct in layered(1u32..99),
        poll_ms in layered(1u64..5000),
        stability_ms in layered(0u64..5000),
        exclude in layered(proptest::bool::ANY),
        model_rf in layered(proptest::bool::ANY),
    ) {
        let file = FileConfig {
            min_token_len: min_token_len.file,
            ngram_max: ngram_max.file,
            tail_sentences: tail_sentences.file,
            min_df_ratio: min_df_pct.file.map(|p| p as f64 / 100.0),
            seed: seed.file,
            split_seed: split_seed.file,
            test_ratio: test_ratio_pct.file.map(|p| p as f64 / 100.0),
            poll_interval_ms: poll_ms.file,
            stability_window_ms: stability_ms.file,
            exclude_disposition_sentences: exclude.file,
            model: model_rf.file.map(|rf| if rf { "rf" } else { "gbt" }.to_string()),
            ..FileConfig::default()
        };
        let flags = FlagOverrides {
            min_token_len: min_token_len.flag,
            ngram_max: ngram_max.flag,
            tail_sentences: tail_sentences.flag,
            min_df_ratio: min_df_pct.flag.map(|p| p as f64 / 100.0),
            seed: seed.flag,
            split_seed: split_seed.flag,
            test_ratio: test_ratio_pct.flag.map(|p| p as f64 / 100.0),
            poll_interval_ms: poll_ms.flag,
            stability_window_ms: stability_ms.flag,
            exclude_disposition_sentences: exclude.flag,
            model: model_rf.flag.map(|rf| if rf { "rf" } else { "gbt" }.to_string()),
            ..FlagOverrides::default()
        };
        let settings = merge_settings(&file, &flags).unwrap();

        prop_assert_eq!(settings.pipeline.prep.min_token_len, min_token_len.effective(3));
        prop_assert_eq!(settings.pipeline.prep.ngram_max, ngram_max.effective(4));
        prop_assert_eq!(settings.pipeline.labeler.tail_sentences, tail_sentences.effective(20));
        let expected_df = min_df_pct.effective(10) as f64 / 100.0;
        let expected_df = if min_df_pct.file.is_none() && min_df_pct.flag.is_none() { 0.10 } else { expected_df };
        prop_assert!((settings.pipeline.min_df_ratio - expected_df).abs() < 1e-15);
        prop_assert_eq!(settings.learner.seed, seed.effective(42));
        prop_assert_eq!(settings.split.seed, split_seed.effective(42));
        let expected_ratio = match (test_ratio_pct.flag, test_ratio_pct.file) {
            (Some(p), _) | (None, Some(p)) => p as f64 / 100.0,
            (None, None) => 0.20,
        };
        prop_assert!((settings.split.test_ratio - expected_ratio).abs() < 1e-15);
        prop_assert_eq!(settings.poll_interval.as_millis() as u64, poll_ms.effective(1000));
        prop_assert_eq!(settings.stability_window.as_millis() as u64, stability_ms.effective(2000));
        prop_assert_eq!(
            settings.pipeline.exclude_disposition_sentences,
            exclude.effective(false)
        );
        let expected_kind = match (model_rf.flag, model_rf.file) {
            (Some(rf), _) | (None, Some(rf)) => if rf { "rf" } else { "gbt" },
            (None, None) => "gbt",
        };
        prop_assert_eq!(settings.learner.kind.as_str(), expected_kind);
    }
}

#[test]
fn defaults_alone_are_valid() {
    let settings = merge_settings(&FileConfig::default(), &FlagOverrides::default()).unwrap();
    assert_eq!(settings.pipeline.prep.min_token_len, 3);
    assert_eq!(settings.pipeline.prep.ngram_max, 4);
    assert!((settings.pipeline.min_df_ratio - 0.10).abs() < 1e-15);
    assert!((settings.split.test_ratio - 0.20).abs() < 1e-15);
    assert_eq!(settings.learner.kind.as_str(), "gbt");
    assert_eq!(settings.learner.seed, 42);
    assert!(!settings.pipeline.exclude_disposition_sentences);
}
