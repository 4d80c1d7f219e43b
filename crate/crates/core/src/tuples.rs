//! Frame tuples: which frames of a video form one puzzle.
//!
//! Frame indices are 1-based wherever a user supplies them and 0-based
//! inside [`FrameRef`]; [`to_internal_index`] is the only conversion point.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default frame indices (1-based) for the fixed-index regime.
pub const DEFAULT_FIXED_INDICES: [usize; 3] = [1, 5, 10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Four listed frames expand to four ordered triples.
    QuadrupleExpand,
    /// One tuple per video at fixed frame indices.
    FixedIndex,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::QuadrupleExpand => "quadruple_expand",
            Regime::FixedIndex => "fixed_index",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadruple_expand" | "quadruple" => Ok(Regime::QuadrupleExpand),
            "fixed_index" | "fixed" => Ok(Regime::FixedIndex),
            other => Err(Error::invalid(format!("unknown tuple regime {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRef {
    /// 0-based temporal index within the video's listed frames.
    pub index: usize,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameTuple {
    pub video_id: String,
    /// Position of this tuple among those built from the same video entry.
    pub ordinal: usize,
    pub frames: Vec<FrameRef>,
    pub regime: Regime,
}

impl FrameTuple {
    pub fn new(video_id: impl Into<String>, ordinal: usize, frames: Vec<FrameRef>, regime: Regime) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::invalid("a tuple needs at least one frame"));
        }
        if frames.windows(2).any(|w| w[0].index >= w[1].index) {
            return Err(Error::invalid("tuple frames must be strictly increasing in time"));
        }
        Ok(FrameTuple { video_id: video_id.into(), ordinal, frames, regime })
    }

    /// Stable identifier `video_id#ordinal`.
    pub fn tuple_id(&self) -> String {
        format!("{}#{}", self.video_id, self.ordinal)
    }

    pub fn n_f(&self) -> usize {
        self.frames.len()
    }
}

/// One line of a tuple list file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleListEntry {
    pub video_id: String,
    pub frame_refs: Vec<String>,
}

/// Parses `video_id frame_ref_1 … frame_ref_k` lines. Blank lines and lines
/// starting with `#` are ignored.
pub fn parse_tuple_list(text: &str) -> Result<Vec<TupleListEntry>> {
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let video_id = fields.next().unwrap().to_string();
        let frame_refs: Vec<String> = fields.map(str::to_string).collect();
        if video_id.contains('#') {
            return Err(Error::Format(format!("line {}: video id may not contain '#'", lineno + 1)));
        }
        entries.push(TupleListEntry { video_id, frame_refs });
    }
    Ok(entries)
}

/// Expands `(f1, f2, f3, f4)` into
/// `[(f1,f2,f3), (f2,f3,f4), (f1,f3,f4), (f1,f2,f4)]`.
pub fn expand_quadruple(video_id: &str, refs: &[String]) -> Result<Vec<FrameTuple>> {
    if refs.len() != 4 {
        return Err(Error::invalid(format!("quadruple expansion needs 4 frames, got {}", refs.len())));
    }
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [1, 2, 3], [0, 2, 3], [0, 1, 3]];
    TRIPLES
        .iter()
        .enumerate()
        .map(|(ordinal, triple)| {
            let frames = triple.iter().map(|&i| FrameRef { index: i, path: refs[i].clone() }).collect();
            FrameTuple::new(video_id, ordinal, frames, Regime::QuadrupleExpand)
        })
        .collect()
}

/// Outcome of building a tuple from one video.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TupleOutcome {
    Built(FrameTuple),
    Skipped { video_id: String, reason: String },
}

/// 1-based user index to 0-based internal index.
pub fn to_internal_index(one_based: usize) -> Result<usize> {
    one_based.checked_sub(1).ok_or_else(|| Error::invalid("frame indices are 1-based; 0 is not valid"))
}

/// Picks frames at the given 1-based indices. Videos too short for the
/// largest index are skipped rather than padded.
pub fn fixed_index_tuple(video_id: &str, frames: &[String], indices: &[usize]) -> Result<TupleOutcome> {
    if indices.is_empty() {
        return Err(Error::invalid("at least one frame index is required"));
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!("frame indices {indices:?} are not strictly increasing")));
    }
    let internal: Vec<usize> = indices.iter().map(|&i| to_internal_index(i)).collect::<Result<_>>()?;
    if let Some(&last) = internal.last() {
        if last >= frames.len() {
            return Ok(TupleOutcome::Skipped {
                video_id: video_id.to_string(),
                reason: format!("video has {} frames, index {} requested", frames.len(), last + 1),
            });
        }
    }
    let refs = internal.iter().map(|&i| FrameRef { index: i, path: frames[i].clone() }).collect();
    Ok(TupleOutcome::Built(FrameTuple::new(video_id, 0, refs, Regime::FixedIndex)?))
}
