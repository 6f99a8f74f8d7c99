//! The vocabulary sidecar written next to an exported dataset CSV, so a
//! later `train` run can rebuild the full model bundle from the CSV alone.

use std::path::Path;

use serde::{Deserialize, Serialize};

use verdictpipe::labeler::LabelerConfig;
use verdictpipe::pipeline::PipelineConfig;
use verdictpipe::textprep::PrepConfig;
use verdictpipe::vectorizer::Vocabulary;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub format_version: u32,
    pub prep_config: PrepConfig,
    pub labeler_config: LabelerConfig,
    pub vocabulary: Vocabulary,
}

impl DatasetSidecar {
    pub fn new(pipeline: &PipelineConfig, vocabulary: Vocabulary) -> Self {
        DatasetSidecar {
            format_version: 1,
            prep_config: pipeline.prep.clone(),
            labeler_config: pipeline.labeler.clone(),
            vocabulary,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), String> {
        let json = serde_json::to_string(self).expect("sidecar serializes");
        std::fs::write(path, json).map_err(|e| format!("cannot write {}: {e}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read vocabulary sidecar {}: {e}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| format!("bad vocabulary sidecar {}: {e}", path.display()))
    }
}
