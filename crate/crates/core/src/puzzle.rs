//! Puzzle records: shuffled patches plus the index of the permutation that
//! shuffled them.
//!
//! Convention: applying permutation `p` to a canonical sequence puts
//! canonical patch number `p[i]` at position `i`. Applying `p⁻¹` to the
//! shuffled sequence restores canonical order.

use std::fmt;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::frame::{normalize_patch, Patch};
use crate::io::perm_text;
use crate::perm::{Permutation, PermutationSet};
use crate::rng::keyed;

/// SHA-256 of a permutation set's text serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PermDigest(pub [u8; 32]);

impl PermDigest {
    pub fn of(set: &PermutationSet) -> Self {
        PermDigest(Sha256::digest(perm_text::to_text(set).as_bytes()).into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::Format(format!("bad digest {s:?}: {e}")))?;
        let arr: [u8; 32] = bytes.try_into().map_err(|_| Error::Format(format!("digest {s:?} is not 32 bytes")))?;
        Ok(PermDigest(arr))
    }
}

impl fmt::Display for PermDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PuzzleRecord<T> {
    pub tuple_id: String,
    /// Patches in shuffled order.
    pub patches: Vec<Patch<T>>,
    /// Row index into the bound permutation set.
    pub label: u32,
    pub perm_set_digest: PermDigest,
}

impl<T: Copy + ToPrimitive> PuzzleRecord<T> {
    /// Per-patch standardized copy of the record.
    pub fn normalized<U: Float + FromPrimitive>(&self) -> PuzzleRecord<U> {
        PuzzleRecord {
            tuple_id: self.tuple_id.clone(),
            patches: self.patches.iter().map(normalize_patch).collect(),
            label: self.label,
            perm_set_digest: self.perm_set_digest,
        }
    }
}

/// Concatenates per-frame patch lists (temporal order, row-major cells) so
/// that position `j` holds patch number `j + 1`.
pub fn canonical_order<T>(tuple_patches: Vec<Vec<Patch<T>>>) -> Result<Vec<Patch<T>>> {
    let Some(first) = tuple_patches.first() else {
        return Err(Error::invalid("no frames"));
    };
    let n_p = first.len();
    if n_p == 0 || tuple_patches.iter().any(|f| f.len() != n_p) {
        let sizes: Vec<usize> = tuple_patches.iter().map(Vec::len).collect();
        return Err(Error::invalid(format!("ragged frames: patch counts {sizes:?}")));
    }
    Ok(tuple_patches.into_iter().flatten().collect())
}

/// `out[i] = canonical[p[i] − 1]`.
pub fn apply_permutation<T: Clone>(canonical: &[T], p: &Permutation) -> Result<Vec<T>> {
    if canonical.len() != p.len() {
        return Err(Error::invalid(format!("sequence length {} != permutation length {}", canonical.len(), p.len())));
    }
    Ok(p.as_slice().iter().map(|&v| canonical[v as usize - 1].clone()).collect())
}

/// Label for a tuple: uniform over the set's rows, keyed by seed, tuple id
/// and epoch.
pub fn draw_label(set: &PermutationSet, seed: u64, tuple_id: &str, epoch: u64) -> u32 {
    let mut key = tuple_id.as_bytes().to_vec();
    key.push(0);
    key.extend_from_slice(&epoch.to_le_bytes());
    keyed(seed, "puzzle.label", &key).gen_range(0..set.len() as u32)
}

/// Shuffles canonical patches by a uniformly drawn row of `set`.
pub fn build_record<T: Clone>(
    tuple_id: &str,
    canonical: Vec<Patch<T>>,
    set: &PermutationSet,
    seed: u64,
    epoch: u64,
) -> Result<PuzzleRecord<T>> {
    if canonical.len() != set.row_len() {
        return Err(Error::invalid(format!(
            "tuple has {} patches, permutation rows have {}",
            canonical.len(),
            set.row_len()
        )));
    }
    let label = draw_label(set, seed, tuple_id, epoch);
    let patches = apply_permutation(&canonical, &set.rows()[label as usize])?;
    Ok(PuzzleRecord { tuple_id: tuple_id.to_string(), patches, label, perm_set_digest: PermDigest::of(set) })
}

/// Checks that the record's label is in range and that undoing its
/// permutation restores canonical source order. A record bound to another
/// set is a [`Error::StalePermutation`].
pub fn verify_record<T: Clone>(rec: &PuzzleRecord<T>, set: &PermutationSet) -> Result<bool> {
    verify_record_with_digest(rec, set, &PermDigest::of(set))
}

/// [`verify_record`] with the set digest precomputed.
pub fn verify_record_with_digest<T: Clone>(rec: &PuzzleRecord<T>, set: &PermutationSet, digest: &PermDigest) -> Result<bool> {
    if rec.perm_set_digest != *digest {
        return Err(Error::StalePermutation { expected: rec.perm_set_digest.to_hex(), found: digest.to_hex() });
    }
    let Some(row) = set.row(rec.label as usize) else {
        return Ok(false);
    };
    if rec.patches.len() != set.row_len() {
        return Ok(false);
    }
    let sources: Vec<_> = rec.patches.iter().map(|p| p.source).collect();
    let restored = apply_permutation(&sources, &row.inverse())?;
    let n_p = set.n_p();
    let frames_ok = restored.iter().enumerate().all(|(j, s)| s.frame as usize == j / n_p);
    let sorted = restored.windows(2).all(|w| w[0].canonical_key() < w[1].canonical_key());
    Ok(frames_ok && sorted)
}
