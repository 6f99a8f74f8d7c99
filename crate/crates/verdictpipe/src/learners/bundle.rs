//! The deployable unit: pipeline config + vocabulary + trained classifier,
//! serialized as a single versioned JSON document. Loading a saved bundle
//! reproduces predictions bit for bit (floats round-trip exactly).

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::TrainedModel;
use crate::labeler::LabelerConfig;
use crate::textprep::PrepConfig;
use crate::vectorizer::Vocabulary;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("io failure on {path}: {source}")]
    IoFailure {
        path: String,
        source: std::io::Error,
    },
    #[error("bundle format_version {found} is newer than supported {supported}")]
    SchemaVersionMismatch { found: u32, supported: u32 },
    #[error("corrupt bundle: {0}")]
    CorruptBundle(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub prep_config: PrepConfig,
    pub labeler_config: LabelerConfig,
    pub vocabulary: Vocabulary,
    pub model: TrainedModel,
}

impl ModelBundle {
    pub fn new(
        prep_config: PrepConfig,
        labeler_config: LabelerConfig,
        vocabulary: Vocabulary,
        model: TrainedModel,
    ) -> Self {
        ModelBundle {
            format_version: FORMAT_VERSION,
            prep_config,
            labeler_config,
            vocabulary,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("bundle serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, BundleError> {
        // version gate first, so future formats fail with the right error
        #[derive(Deserialize)]
        struct VersionProbe {
            format_version: u32,
        }
        let probe: VersionProbe = serde_json::from_str(text)
            .map_err(|e| BundleError::CorruptBundle(e.to_string()))?;
        if probe.format_version > FORMAT_VERSION {
            return Err(BundleError::SchemaVersionMismatch {
                found: probe.format_version,
                supported: FORMAT_VERSION,
            });
        }
        let bundle: ModelBundle =
            serde_json::from_str(text).map_err(|e| BundleError::CorruptBundle(e.to_string()))?;
        if bundle.model.n_features != bundle.vocabulary.len() {
            return Err(BundleError::CorruptBundle(format!(
                "model expects {} features but vocabulary has {}",
                bundle.model.n_features,
                bundle.vocabulary.len()
            )));
        }
        bundle
            .model
            .check_integrity()
            .map_err(BundleError::CorruptBundle)?;
        Ok(bundle)
    }

    pub fn save(&self, path: &Path) -> Result<(), BundleError> {
        std::fs::write(path, self.to_json()).map_err(|source| BundleError::IoFailure {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, BundleError> {
        let text = std::fs::read_to_string(path).map_err(|source| BundleError::IoFailure {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical serialization; identifies the exact
    /// pipeline behind a prediction.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_json().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
