//! Permutations over patch indices, permutation sets (the label matrix) and
//! the Hamming-distance diversity metrics computed over them.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::Rational;

/// A bijection on `{1, …, L}` stored as its value sequence.
///
/// Position `i` (0-based) holds value `entries[i]` (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    entries: Vec<u16>,
}

impl Permutation {
    pub fn new(entries: Vec<u16>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("permutation must have at least one entry"));
        }
        let len = entries.len();
        if len > u16::MAX as usize {
            return Err(Error::invalid(format!("permutation length {len} exceeds {}", u16::MAX)));
        }
        let mut seen = vec![false; len];
        for &v in &entries {
            let v = v as usize;
            if v == 0 || v > len {
                return Err(Error::invalid(format!("value {v} outside 1..={len}")));
            }
            if std::mem::replace(&mut seen[v - 1], true) {
                return Err(Error::invalid(format!("value {v} appears more than once")));
            }
        }
        Ok(Permutation { entries })
    }

    /// Builds from 0-based values, as produced by the enumerators.
    pub fn from_zero_based(values: &[u16]) -> Result<Self> {
        Self::new(values.iter().map(|&v| v + 1).collect())
    }

    pub(crate) fn from_entries_unchecked(entries: Vec<u16>) -> Self {
        debug_assert!(Permutation::new(entries.clone()).is_ok());
        Permutation { entries }
    }

    pub fn identity(len: usize) -> Result<Self> {
        Self::new((1..=len).map(|v| v as u16).collect())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.entries
    }

    pub fn into_inner(self) -> Vec<u16> {
        self.entries
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u16; self.entries.len()];
        for (pos, &v) in self.entries.iter().enumerate() {
            inv[v as usize - 1] = pos as u16 + 1;
        }
        Permutation { entries: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.entries.iter().enumerate().all(|(i, &v)| v as usize == i + 1)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// How a permutation set was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerMode {
    /// Block-coherent search space: frames stay contiguous.
    SpatialCoherent,
    /// Greedy search over all `L!` permutations.
    UnconstrainedExact,
    /// Greedy search over a seeded uniform candidate pool.
    UnconstrainedPool,
}

impl SamplerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplerMode::SpatialCoherent => "spatial_coherent",
            SamplerMode::UnconstrainedExact => "unconstrained_exact",
            SamplerMode::UnconstrainedPool => "unconstrained_pool",
        }
    }
}

impl fmt::Display for SamplerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spatial_coherent" => Ok(SamplerMode::SpatialCoherent),
            "unconstrained_exact" => Ok(SamplerMode::UnconstrainedExact),
            "unconstrained_pool" => Ok(SamplerMode::UnconstrainedPool),
            other => Err(Error::invalid(format!("unknown sampler mode {other:?}"))),
        }
    }
}

/// The label matrix: `N` pairwise-distinct permutations of `n_p · n_f` patches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationSet {
    rows: Vec<Permutation>,
    n_p: usize,
    n_f: usize,
    mode: SamplerMode,
    seed: u64,
}

impl PermutationSet {
    pub fn new(rows: Vec<Permutation>, n_p: usize, n_f: usize, mode: SamplerMode, seed: u64) -> Result<Self> {
        if n_p == 0 || n_f == 0 {
            return Err(Error::invalid("n_p and n_f must be at least 1"));
        }
        if rows.is_empty() {
            return Err(Error::invalid("permutation set must have at least one row"));
        }
        let len = n_p * n_f;
        let mut seen = HashSet::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != len {
                return Err(Error::invalid(format!("row {i} has length {}, expected {len}", row.len())));
            }
            if !seen.insert(row.as_slice()) {
                return Err(Error::invalid(format!("row {i} duplicates an earlier row")));
            }
            if mode == SamplerMode::SpatialCoherent && !is_block_coherent(row, n_p, n_f)? {
                return Err(Error::invalid(format!("row {i} is not block-coherent")));
            }
        }
        Ok(PermutationSet { rows, n_p, n_f, mode, seed })
    }

    pub fn rows(&self) -> &[Permutation] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> Option<&Permutation> {
        self.rows.get(index)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    /// Length of every row, `n_p · n_f`.
    pub fn row_len(&self) -> usize {
        self.n_p * self.n_f
    }

    pub fn mode(&self) -> SamplerMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// First `count` rows as a set of their own (used for greedy-step checks).
    pub fn prefix(&self, count: usize) -> Result<PermutationSet> {
        if count == 0 || count > self.rows.len() {
            return Err(Error::invalid(format!("prefix length {count} outside 1..={}", self.rows.len())));
        }
        Ok(PermutationSet { rows: self.rows[..count].to_vec(), ..self.clone() })
    }
}

/// Summary of all unordered pairwise Hamming distances in a set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiversityStats {
    pub min_pairwise: u32,
    pub mean_pairwise: Rational,
    /// `histogram[d]` counts pairs at distance `d`, for `d` in `0..=L`.
    pub histogram: Vec<u64>,
}

impl DiversityStats {
    pub fn pair_count(&self) -> u64 {
        self.histogram.iter().sum()
    }

    pub fn mean_as_f64(&self) -> f64 {
        *self.mean_pairwise.numer() as f64 / *self.mean_pairwise.denom() as f64
    }
}

/// Number of positions at which `a` and `b` hold different values.
pub fn hamming(a: &Permutation, b: &Permutation) -> Result<u32> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    Ok(hamming_slices(a.as_slice(), b.as_slice()))
}

#[inline]
pub(crate) fn hamming_slices(a: &[u16], b: &[u16]) -> u32 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
}

/// True iff every block of `n_p` consecutive positions holds exactly the
/// values of one source frame, `{n_p·i + 1, …, n_p·(i+1)}`, with each frame
/// used once.
pub fn is_block_coherent(p: &Permutation, n_p: usize, n_f: usize) -> Result<bool> {
    if n_p == 0 || n_f == 0 || p.len() != n_p * n_f {
        return Err(Error::invalid(format!(
            "permutation length {} does not match n_p·n_f = {}·{}",
            p.len(),
            n_p,
            n_f
        )));
    }
    // p is a bijection, so it suffices that each block draws from a single
    // frame and no frame is claimed twice.
    let mut used = vec![false; n_f];
    for block in p.as_slice().chunks(n_p) {
        let frame = (block[0] as usize - 1) / n_p;
        if block.iter().any(|&v| (v as usize - 1) / n_p != frame) {
            return Ok(false);
        }
        if std::mem::replace(&mut used[frame], true) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Min, mean and histogram of the pairwise Hamming distances of `set`.
pub fn diversity(set: &PermutationSet) -> Result<DiversityStats> {
    let n = set.len();
    if n < 2 {
        return Err(Error::invalid("diversity needs at least two rows"));
    }
    let len = set.row_len();
    let mut histogram = vec![0u64; len + 1];
    let rows = set.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            histogram[hamming_slices(rows[i].as_slice(), rows[j].as_slice()) as usize] += 1;
        }
    }
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    let total: u64 = histogram.iter().enumerate().map(|(d, &c)| d as u64 * c).sum();
    let min_pairwise = histogram.iter().position(|&c| c > 0).unwrap_or(0) as u32;
    Ok(DiversityStats { min_pairwise, mean_pairwise: Rational::new(total, pairs), histogram })
}
