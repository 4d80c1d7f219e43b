//! Greedy max-average-Hamming permutation-set sampling.
//!
//! Both samplers build the set one row at a time: the first row is random,
//! every later row is the candidate with the largest summed Hamming distance
//! to all rows chosen so far. Ties go to the candidate that comes first in
//! the sampler's enumeration order, and candidates equal to an already chosen
//! row are skipped.
//!
//! Sums are compared as exact integers. Scoring uses a position/value
//! agreement table: for chosen rows `r_1..r_m` and candidate `c`,
//! `Σ_r hamming(c, r) = L·m − Σ_pos count[pos][c[pos]]`, where
//! `count[pos][v]` is the number of chosen rows holding `v` at `pos`. The
//! table is updated once per step, so a candidate costs `O(L)` (or `O(n_f)`
//! with the block tables of the spatial sampler) instead of `O(L·m)`.
//!
//! Candidate evaluation is split into fixed ranges of the enumeration and
//! reduced by (best sum, earliest index), so results do not depend on the
//! number of rayon workers.

use std::collections::HashSet;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::perm::SamplerMode;
use crate::Rational;

pub mod lex;
pub mod spatial;
pub mod unconstrained;

pub use lex::{factorial, rank_lex, unrank_lex};
pub use spatial::{generate_sp, oracle_sp, space_size_spatial, OracleStep, ORACLE_SPACE_LIMIT};
pub use unconstrained::{generate_orig, space_size_unconstrained};

/// Default cap on candidates per step in exact unconstrained mode.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerParams {
    /// Target set size `N`.
    pub n: usize,
    /// Patches per frame.
    pub n_p: usize,
    /// Frames per tuple.
    pub n_f: usize,
    pub seed: u64,
    pub mode: SamplerMode,
    /// Candidate pool size, pool mode only.
    pub pool_size: usize,
    /// Maximum space size per step accepted by exact unconstrained mode.
    pub budget: u64,
}

impl SamplerParams {
    pub fn spatial(n: usize, n_p: usize, n_f: usize, seed: u64) -> Self {
        SamplerParams {
            n,
            n_p,
            n_f,
            seed,
            mode: SamplerMode::SpatialCoherent,
            pool_size: 0,
            budget: DEFAULT_ENUMERATION_BUDGET,
        }
    }

    pub fn exact(n: usize, n_p: usize, n_f: usize, seed: u64) -> Self {
        SamplerParams { mode: SamplerMode::UnconstrainedExact, ..Self::spatial(n, n_p, n_f, seed) }
    }

    pub fn pool(n: usize, n_p: usize, n_f: usize, seed: u64, pool_size: usize) -> Self {
        SamplerParams { mode: SamplerMode::UnconstrainedPool, pool_size, ..Self::spatial(n, n_p, n_f, seed) }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn row_len(&self) -> usize {
        self.n_p * self.n_f
    }

    pub(crate) fn validate_shape(&self) -> Result<()> {
        if self.n == 0 || self.n_p == 0 || self.n_f == 0 {
            return Err(Error::invalid("N, n_p and n_f must all be at least 1"));
        }
        if self.row_len() > u16::MAX as usize {
            return Err(Error::invalid("n_p·n_f too large"));
        }
        Ok(())
    }
}

/// Generates a set with whichever sampler `params.mode` selects.
pub fn generate(params: &SamplerParams) -> Result<(crate::PermutationSet, SamplerReport)> {
    match params.mode {
        SamplerMode::SpatialCoherent => generate_sp(params),
        SamplerMode::UnconstrainedExact | SamplerMode::UnconstrainedPool => generate_orig(params),
    }
}

/// Per-step history and cost counters of one sampler run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerReport {
    pub mode: SamplerMode,
    /// Summed Hamming distance of the row chosen at step `h = 2..=N` to the
    /// `h − 1` rows before it.
    pub per_step_best_sum: Vec<u64>,
    /// Candidates scored at each step.
    pub per_step_candidates: Vec<u64>,
    pub candidates_evaluated: u64,
    pub wall_time: Duration,
    /// Largest number of candidate rows held at once by one worker.
    pub peak_candidate_memory_rows: u64,
}

impl SamplerReport {
    /// Mean distance `D̄` of each chosen row: `per_step_best_sum[h−2] / (h − 1)`.
    pub fn per_step_best_distance(&self) -> Vec<Rational> {
        self.per_step_best_sum
            .iter()
            .enumerate()
            .map(|(i, &sum)| Rational::new(sum, i as u64 + 1))
            .collect()
    }

    pub fn steps(&self) -> usize {
        self.per_step_best_sum.len()
    }
}

/// `count[pos·L + v]` = chosen rows holding 0-based value `v` at `pos`.
pub(crate) struct AgreementTable {
    len: usize,
    counts: Vec<u32>,
    rows: u32,
}

impl AgreementTable {
    pub(crate) fn new(len: usize) -> Self {
        AgreementTable { len, counts: vec![0; len * len], rows: 0 }
    }

    /// Adds a chosen row given by 1-based values.
    pub(crate) fn add(&mut self, row: &[u16]) {
        debug_assert_eq!(row.len(), self.len);
        for (pos, &v) in row.iter().enumerate() {
            self.counts[pos * self.len + v as usize - 1] += 1;
        }
        self.rows += 1;
    }

    #[inline]
    pub(crate) fn get(&self, pos: usize, zero_based_value: usize) -> u32 {
        self.counts[pos * self.len + zero_based_value]
    }

    pub(crate) fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Converts a total agreement into the summed Hamming distance.
    pub(crate) fn distance_sum(&self, agreement: u32) -> u64 {
        self.len as u64 * self.rows as u64 - agreement as u64
    }
}

/// Local argmax candidate: lowest agreement, then earliest enumeration index.
#[derive(Debug, Clone)]
pub(crate) struct Best {
    pub agreement: u32,
    pub index: u64,
    /// 1-based row values.
    pub row: Vec<u16>,
}

pub(crate) fn pick_best(a: Option<Best>, b: Option<Best>) -> Option<Best> {
    match (a, b) {
        (Some(a), Some(b)) => {
            if (b.agreement, b.index) < (a.agreement, a.index) {
                Some(b)
            } else {
                Some(a)
            }
        }
        (a, None) => a,
        (None, b) => b,
    }
}

pub(crate) type ChosenRows = HashSet<Vec<u16>>;
