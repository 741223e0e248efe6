//! `manifest.json` at the root of every output directory. It is rewritten
//! after each artifact so an interrupted run still names what it finished.

use crate::config::sha256_hex;
use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Complete,
    Failed,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub command: String,
    pub config: Value,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub versions: BTreeMap<String, String>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time: f64,
    pub outputs: Vec<Artifact>,
    #[serde(skip)]
    root: PathBuf,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunManifest {
    pub fn create(root: &Path, command: &str, config: Value, config_hash: String, seeds: Vec<u64>) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let mut versions = BTreeMap::new();
        versions.insert("daa".to_string(), env!("CARGO_PKG_VERSION").to_string());
        let m = Self {
            command_line: std::env::args().collect(),
            command: command.to_string(),
            config,
            config_hash,
            seeds,
            versions,
            status: Status::Running,
            error: None,
            wall_time: 0.0,
            outputs: Vec::new(),
            root: root.to_path_buf(),
            started: Some(Instant::now()),
        };
        m.save()?;
        Ok(m)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Writes `bytes` to `rel` and records it.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
        self.push(rel, bytes)
    }

    /// Records a file something else already wrote under the root.
    pub fn register(&mut self, rel: &str) -> Result<()> {
        let p = self.path(rel);
        let bytes = fs::read(&p).with_context(|| format!("reading back {}", p.display()))?;
        self.push(rel, &bytes)
    }

    fn push(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        self.outputs.retain(|a| a.path != rel);
        self.outputs.push(Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        self.save()
    }

    pub fn finish(mut self, outcome: &Result<()>) -> Result<()> {
        self.status = match outcome {
            Ok(()) => Status::Complete,
            Err(e) => {
                self.error = Some(format!("{e:#}"));
                Status::Failed
            }
        };
        self.save()
    }

    fn save(&self) -> Result<()> {
        let mut m = serde_json::to_value(self)?;
        m["wall_time"] = self.started.map_or(0.0, |s| s.elapsed().as_secs_f64()).into();
        let text = serde_json::to_string_pretty(&m)? + "\n";
        let p = self.root.join(FILE_NAME);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    }
}
