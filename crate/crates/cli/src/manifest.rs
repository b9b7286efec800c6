//! Run manifests: written before compute starts, finalized when the run
//! completes, carrying per-(N, lambda) completion status so interrupted
//! sweeps can resume.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use tsre_core::harness::SweepConfig;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupStatus {
    Pending,
    Done,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupEntry {
    pub n: usize,
    pub lambda: f64,
    pub status: GroupStatus,
    /// Part file (JSON-lines) holding this group's records.
    pub part_file: String,
    pub n_records: usize,
    pub n_failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub master_seed: u64,
    pub config: SweepConfig,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub output_dir: PathBuf,
    pub groups: Vec<GroupEntry>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(config: &SweepConfig, output_dir: &Path, warnings: Vec<String>) -> Self {
        let mut groups = Vec::new();
        for &n in &config.n_list {
            for &lambda in &config.lambda_list {
                groups.push(GroupEntry {
                    n,
                    lambda,
                    status: GroupStatus::Pending,
                    part_file: format!("parts/records-n{n}-l{}.jsonl", lambda_tag(lambda)),
                    n_records: 0,
                    n_failures: 0,
                });
            }
        }
        Self {
            artifact_version: ARTIFACT_VERSION.to_string(),
            master_seed: config.master_seed,
            config: config.clone(),
            started_at: chrono::Utc::now().to_rfc3339(),
            finished_at: None,
            output_dir: output_dir.to_path_buf(),
            groups,
            warnings,
        }
    }

    pub fn path(output_dir: &Path) -> PathBuf {
        output_dir.join("manifest.json")
    }

    pub fn save(&self, output_dir: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(Self::path(output_dir), text).context("writing manifest")?;
        Ok(())
    }

    pub fn load(output_dir: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(Self::path(output_dir)).context("reading manifest")?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn lambda_tag(lambda: f64) -> String {
    format!("{lambda}").replace('.', "p").replace('-', "m")
}
