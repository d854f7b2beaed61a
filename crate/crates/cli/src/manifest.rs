//! `manifest.json`: what was generated, evaluated and reported in an output
//! directory. All paths are relative to that directory.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use visdiag_core::config::{GameKind, PieceSet};

use crate::{read_string, write_atomic, CliError};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SPEC_FILE: &str = "spec.yaml";

/// Stage reached by a scene; only ever moves forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pending,
    Rendered,
    Evaluated,
    Scored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFiles {
    pub image: String,
    pub legend_json: String,
    pub legend_txt: String,
    pub qa: String,
    pub scene: String,
}

impl SceneFiles {
    pub fn for_index(dataset: &str, index: u64) -> Self {
        let stem = format!("{dataset}_{index:05}");
        Self {
            image: format!("images/{stem}.png"),
            legend_json: format!("legends/{stem}.json"),
            legend_txt: format!("legends/{stem}.txt"),
            qa: format!("qa/{stem}.json"),
            scene: format!("scenes/{stem}.json"),
        }
    }

    pub fn all(&self) -> [&str; 5] {
        [&self.image, &self.legend_json, &self.legend_txt, &self.qa, &self.scene]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEntry {
    pub index: u64,
    pub derived_seed: u64,
    pub assignments: BTreeMap<String, Value>,
    pub status: Status,
    pub files: SceneFiles,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_sha256: Option<String>,
}

impl SceneEntry {
    pub fn advance(&mut self, to: Status) {
        self.status = self.status.max(to);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionGrid {
    pub keys: Vec<String>,
    pub preprompts: Vec<String>,
    pub instructions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub endpoint: String,
    pub flavor: String,
    pub model: String,
    pub grid: QuestionGrid,
    pub exchanges: String,
    pub records: String,
    pub usage: String,
    pub requests: u64,
    pub completed: u64,
    pub failed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub dataset: String,
    pub game: GameKind,
    pub piece_set: PieceSet,
    pub seed: u64,
    /// SHA-256 of the canonical spec document in `spec_file`.
    pub spec_sha256: String,
    pub spec_file: String,
    pub total: u64,
    pub questions: QuestionGrid,
    pub scenes: Vec<SceneEntry>,
    #[serde(default)]
    pub runs: BTreeMap<String, RunEntry>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = read_string(&path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn load_if_present(dir: &Path) -> Result<Option<Self>, CliError> {
        if dir.join(MANIFEST_FILE).exists() {
            Self::load(dir).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())
    }

    /// Every file the manifest refers to, relative to the output directory.
    pub fn referenced_files(&self) -> Vec<String> {
        let mut out = vec![self.spec_file.clone()];
        for s in &self.scenes {
            if s.status >= Status::Rendered {
                out.extend(s.files.all().iter().map(|f| f.to_string()));
            }
        }
        for r in self.runs.values() {
            out.extend([r.exchanges.clone(), r.records.clone(), r.usage.clone()]);
            out.extend(r.reports.iter().cloned());
        }
        out.sort();
        out.dedup();
        out
    }
}
