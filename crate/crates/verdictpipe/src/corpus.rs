//! Local-directory ingestion of judgment documents.
//!
//! Plain text is read natively; PDFs are delegated to a user-configured
//! external converter command (text-based PDFs assumed — no OCR, no layout
//! analysis). Each readable file becomes a `CaseDocument` with a stable
//! identifier derived from its filename.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use thiserror::Error;

use crate::labeler::{extract_disposition, Disposition, LabelerConfig};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("unsupported extension: {0} (expected .txt or .pdf)")]
    UnsupportedExtension(PathBuf),
    #[error("converter failed for {path}: {reason}")]
    ConverterFailed { path: PathBuf, reason: String },
    #[error("empty document: {0}")]
    EmptyDocument(PathBuf),
    #[error("empty directory: {0} contains no .txt or .pdf files")]
    EmptyDirectory(PathBuf),
    #[error("cannot read directory {path}: {source}")]
    DirUnreadable {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CorpusError {
    /// Short stable name used in manifests and error files.
    pub fn name(&self) -> &'static str {
        match self {
            CorpusError::MissingFile(_) => "MissingFile",
            CorpusError::UnsupportedExtension(_) => "UnsupportedExtension",
            CorpusError::ConverterFailed { .. } => "ConverterFailed",
            CorpusError::EmptyDocument(_) => "EmptyDocument",
            CorpusError::EmptyDirectory(_) => "EmptyDirectory",
            CorpusError::DirUnreadable { .. } => "DirUnreadable",
        }
    }
}

/// External PDF-to-text converter: a command template with an `{input}`
/// placeholder, e.g. `pdftotext {input} -`. Standard output is captured
/// as the document text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConverterConfig {
    pub command_template: String,
}

impl Default for ConverterConfig {
    fn default() -> Self {
        ConverterConfig {
            command_template: "pdftotext {input} -".to_string(),
        }
    }
}

impl ConverterConfig {
    pub fn new(template: &str) -> Self {
        ConverterConfig {
            command_template: template.to_string(),
        }
    }

    /// Identifier recorded in the manifest.
    pub fn id(&self) -> String {
        self.command_template.clone()
    }

    fn build_command(&self, input: &Path) -> Result<Command, String> {
        let mut parts = self.command_template.split_whitespace();
        let program = parts.next().ok_or("empty converter command template")?;
        let mut cmd = Command::new(program);
        let mut substituted = false;
        for part in parts {
            if part.contains("{input}") {
                substituted = true;
                cmd.arg(part.replace("{input}", &input.display().to_string()));
            } else {
                cmd.arg(part);
            }
        }
        if !substituted {
            return Err("converter template has no {input} placeholder".into());
        }
        Ok(cmd)
    }
}

/// One ingested judgment document.
#[derive(Debug, Clone)]
pub struct CaseDocument {
    /// Stable id derived from the filename stem, unique within a manifest.
    pub doc_id: String,
    pub raw_text: String,
    pub source_path: PathBuf,
    pub label: Option<Disposition>,
    /// Length of `raw_text` in characters.
    pub char_count: usize,
}

/// A per-file ingestion failure, recorded rather than fatal.
#[derive(Debug)]
pub struct IngestFileError {
    pub path: PathBuf,
    pub error: CorpusError,
}

/// The result of ingesting a directory: documents ordered by `doc_id`,
/// plus per-file error records and provenance metadata.
#[derive(Debug)]
pub struct Corpus {
    pub documents: Vec<CaseDocument>,
    pub errors: Vec<IngestFileError>,
    pub converter_id: String,
    /// RFC 3339 ingestion timestamp.
    pub created_at: String,
}

impl Corpus {
    /// Render the manifest: one line per document,
    /// `doc_id<TAB>label-or-"?"<TAB>char_count<TAB>source_path`.
    pub fn manifest_text(&self) -> String {
        let mut out = String::new();
        for doc in &self.documents {
            let label = doc.label.map(|d| d.as_str()).unwrap_or("?");
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                doc.doc_id,
                label,
                doc.char_count,
                doc.source_path.display()
            ));
        }
        out
    }

    pub fn labeled_count(&self) -> usize {
        self.documents.iter().filter(|d| d.label.is_some()).count()
    }
}

/// Read a document as UTF-8 text.
///
/// `.txt` files are read directly (invalid byte sequences become U+FFFD);
/// `.pdf` files go through the configured converter, whose stdout is the
/// text. NUL characters are replaced with spaces. The result must be
/// non-empty after whitespace trimming.
pub fn extract_text(path: &Path, converter: &ConverterConfig) -> Result<String, CorpusError> {
    if !path.is_file() {
        return Err(CorpusError::MissingFile(path.to_path_buf()));
    }
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    let text = match ext.as_str() {
        "txt" => {
            let bytes = std::fs::read(path).map_err(|_| {
                CorpusError::MissingFile(path.to_path_buf())
            })?;
            String::from_utf8_lossy(&bytes).into_owned()
        }
        "pdf" => {
            let mut cmd = converter
                .build_command(path)
                .map_err(|reason| CorpusError::ConverterFailed {
                    path: path.to_path_buf(),
                    reason,
                })?;
            let output = cmd.output().map_err(|e| CorpusError::ConverterFailed {
                path: path.to_path_buf(),
                reason: format!("failed to run converter: {e}"),
            })?;
            if !output.status.success() {
                return Err(CorpusError::ConverterFailed {
                    path: path.to_path_buf(),
                    reason: format!("converter exited with {}", output.status),
                });
            }
            let text = String::from_utf8_lossy(&output.stdout).into_owned();
            if text.trim().is_empty() {
                return Err(CorpusError::ConverterFailed {
                    path: path.to_path_buf(),
                    reason: "converter produced no output".into(),
                });
            }
            text
        }
        _ => return Err(CorpusError::UnsupportedExtension(path.to_path_buf())),
    };
    let text = if text.contains('\0') {
        text.replace('\0', " ")
    } else {
        text
    };
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyDocument(path.to_path_buf()));
    }
    Ok(text)
}

/// Lowercase a filename stem into the `[a-z0-9_-]` id alphabet.
fn sanitize_stem(stem: &str) -> String {
    let mut id: String = stem
        .to_lowercase()
        .chars()
        .map(|c| {
            if c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if id.is_empty() {
        id.push('_');
    }
    id
}

/// Derive a document id from a path, without collision handling.
pub fn doc_id_for_path(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    sanitize_stem(&stem)
}

/// Ingest every `.txt` / `.pdf` file in `dir`.
///
/// Files are processed in lexicographic filename order; id collisions get
/// a numeric suffix, so ingesting the same directory twice yields an
/// identical manifest. Per-file extraction failures are recorded in the
/// result, not raised.
pub fn ingest_directory(
    dir: &Path,
    converter: &ConverterConfig,
    labeler_cfg: &LabelerConfig,
) -> Result<Corpus, CorpusError> {
    let entries = std::fs::read_dir(dir).map_err(|source| CorpusError::DirUnreadable {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut candidates: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension()
                        .map(|e| e.to_string_lossy().to_lowercase())
                        .as_deref(),
                    Some("txt") | Some("pdf")
                )
        })
        .collect();
    candidates.sort_by_key(|p| p.file_name().map(|n| n.to_os_string()));
    if candidates.is_empty() {
        return Err(CorpusError::EmptyDirectory(dir.to_path_buf()));
    }

    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut documents = Vec::new();
    let mut errors = Vec::new();
    for path in candidates {
        let base = doc_id_for_path(&path);
        let n = seen.entry(base.clone()).or_insert(0);
        *n += 1;
        let doc_id = if *n == 1 { base } else { format!("{base}-{n}") };
        match extract_text(&path, converter) {
            Ok(raw_text) => {
                let label = extract_disposition(&raw_text, labeler_cfg).label();
                let char_count = raw_text.chars().count();
                documents.push(CaseDocument {
                    doc_id,
                    raw_text,
                    source_path: path,
                    label,
                    char_count,
                });
            }
            Err(error) => errors.push(IngestFileError { path, error }),
        }
    }
    documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(Corpus {
        documents,
        errors,
        converter_id: converter.id(),
        created_at: chrono::Utc::now().to_rfc3339(),
    })
}
