//! Dataset manifest: pretty-printed JSON describing how a dataset was built,
//! which shards it has, and the status of every tuple.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{GrayScope, GridSpec};
use crate::tuples::Regime;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset_name: String,
    pub tool_version: String,
    pub regime: Regime,
    pub n_f: usize,
    pub n_p: usize,
    pub grid: GridSpec,
    pub gray_prob: f64,
    pub gray_scope: GrayScope,
    pub encoding: String,
    pub seed: u64,
    pub epoch: u64,
    pub perm_set_digest: String,
    pub perm_file: String,
    /// Command-line flags the dataset was built with.
    pub flags: Vec<String>,
    pub shards: Vec<ShardEntry>,
    pub tuples: Vec<TupleEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    pub file: String,
    pub records: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleEntry {
    pub tuple_id: String,
    pub video_id: String,
    pub frames: Vec<String>,
    #[serde(flatten)]
    pub status: TupleStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TupleStatus {
    Built { shard: String, label: u32 },
    Skipped { reason: String },
}

impl Manifest {
    pub fn built_count(&self) -> usize {
        self.tuples.iter().filter(|t| matches!(t.status, TupleStatus::Built { .. })).count()
    }

    pub fn skipped_count(&self) -> usize {
        self.tuples.len() - self.built_count()
    }

    /// Structural checks: unique tuple ids, shard record counts match the
    /// built entries that point at them.
    pub fn check(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for t in &self.tuples {
            if !ids.insert(t.tuple_id.as_str()) {
                return Err(Error::Verification(format!("tuple {} listed twice in manifest", t.tuple_id)));
            }
        }
        for shard in &self.shards {
            let n = self
                .tuples
                .iter()
                .filter(|t| matches!(&t.status, TupleStatus::Built { shard: s, .. } if *s == shard.file))
                .count() as u64;
            if n != shard.records {
                return Err(Error::Verification(format!(
                    "shard {} declares {} records, manifest lists {n}",
                    shard.file, shard.records
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("manifest: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        super::write_file(path, self.to_json().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&super::read_text(path)?)
    }
}
