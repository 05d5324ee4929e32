//! Dataset layout and the per-sample manifest record.
//!
//! ```text
//! images/{split}/{id}.png
//! labels/{split}/{id}.txt
//! manifest.jsonl
//! summary.json
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use idbsynth_core::record::{DocumentKind, IdentityRecord, Source};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::AugmentTrace;
use crate::compositor::{BBox, Symbology};
use crate::extract::ModuleGrid;

pub const MANIFEST: &str = "manifest.jsonl";
pub const SUMMARY: &str = "summary.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
}

impl SplitName {
    pub const fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the serialized record line.
pub fn record_hash(record: &IdentityRecord) -> String {
    sha256_hex(record.to_line().as_bytes())
}

/// PDF417 parameters of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pdf417Params {
    pub ec_level: u8,
    pub columns: usize,
    pub rows: usize,
}

/// One `manifest.jsonl` line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleMeta {
    pub id: String,
    pub split: SplitName,
    pub image: String,
    pub label: String,
    pub kind: DocumentKind,
    pub source: Source,
    pub issuer: String,
    pub template_id: String,
    pub symbology: Symbology,
    pub class_id: u8,
    pub record_hash: String,
    pub payload_sha256: String,
    pub payload_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pdf417: Option<Pdf417Params>,
    /// Module size in pixels before augmentation.
    pub scale: u32,
    /// Top-left of the first module before augmentation.
    pub origin: [u32; 2],
    /// Symbol size in modules, quiet zone excluded.
    pub modules: [usize; 2],
    pub quiet_zone: usize,
    pub bbox: BBox,
    pub augmented: bool,
    pub trace: AugmentTrace,
    pub seed: u64,
}

impl SampleMeta {
    pub fn module_grid(&self) -> ModuleGrid {
        ModuleGrid {
            origin: (self.origin[0] as f64, self.origin[1] as f64),
            scale: self.scale as f64,
            modules: (self.modules[0], self.modules[1]),
        }
    }
}

pub fn image_rel(split: SplitName, id: &str) -> String {
    format!("images/{}/{id}.png", split.as_str())
}

pub fn label_rel(split: SplitName, id: &str) -> String {
    format!("labels/{}/{id}.txt", split.as_str())
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

pub fn write_manifest(path: &Path, rows: &[SampleMeta]) -> Result<(), ManifestError> {
    let mut text = String::new();
    for r in rows {
        text.push_str(&serde_json::to_string(r).expect("meta serializes"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| ManifestError::Io { path: path.to_path_buf(), message: e.to_string() })
}

pub fn read_manifest(path: &Path) -> Result<Vec<SampleMeta>, ManifestError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ManifestError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ManifestError::Parse { path: path.to_path_buf(), line: i + 1, message: e.to_string() })
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub train: usize,
    pub val: usize,
    pub augmented: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub id: String,
    pub kind: DocumentKind,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildSummary {
    pub seed: u64,
    pub requested: usize,
    pub written: usize,
    pub train_fraction: f64,
    pub per_kind: BTreeMap<DocumentKind, KindSummary>,
    pub failures: Vec<SampleFailure>,
}
