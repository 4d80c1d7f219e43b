//! On-disk formats: permutation matrices, sampler reports, puzzle shards and
//! dataset manifests.

use std::path::Path;

use crate::error::{Error, Result};

pub mod manifest;
pub mod perm_text;
pub mod report;
pub mod shard;

pub use manifest::{Manifest, ShardEntry, TupleEntry, TupleStatus};
pub use perm_text::{read_perm_file, write_perm_file};
pub use report::{read_report, write_report};
pub use shard::{read_shard, read_shard_as, write_shard, PixelEncoding, ShardData, ShardHeader, ShardPixel};

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_file(path)?).map_err(|_| Error::Format(format!("{} is not UTF-8", path.display())))
}
