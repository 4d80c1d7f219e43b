//! Spatially coherent sampler: the search space keeps each frame's patches
//! together as one block, so it factors into `n_f!` frame orders times
//! `(n_p!)^{n_f}` within-frame arrangements.
//!
//! Enumeration order (which fixes tie-breaking): frame order `f` over the
//! lexicographic permutations of the frames, then the combination counter
//! `c` whose base-`n_p!` digits give the table rows of frames `2..n_f`
//! (frame 2 is the least significant digit), then the table row `j` of
//! frame 1. A candidate's global index is `(f·combos + c)·n_p! + j`. One
//! `(f, c)` pair is a subset of `n_p!` candidates differing only in frame 1.

use std::collections::HashSet;
use std::time::Instant;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::lex::{all_zero_based, factorial};
use super::{pick_best, AgreementTable, Best, ChosenRows, SamplerParams, SamplerReport};
use crate::error::{Error, Result};
use crate::perm::{hamming, Permutation, PermutationSet, SamplerMode};
use crate::rng::keyed;
use crate::Rational;

/// Largest spatial space the oracle will materialize.
pub const ORACLE_SPACE_LIMIT: u64 = 1_000_000;

const SUBSETS_PER_CHUNK: u64 = 64;

/// `(n_p!)^{n_f} · n_f!`, the number of block-coherent permutations.
pub fn space_size_spatial(n_p: usize, n_f: usize) -> Result<u64> {
    if n_p == 0 || n_f == 0 {
        return Err(Error::invalid("n_p and n_f must be at least 1"));
    }
    let overflow = || Error::capacity(format!("({n_p}!)^{n_f}·{n_f}! overflows 64 bits"), "overflow", u64::MAX);
    let per_frame = factorial(n_p).ok_or_else(overflow)?;
    let orders = factorial(n_f).ok_or_else(overflow)?;
    (0..n_f)
        .try_fold(orders, |acc, _| acc.checked_mul(per_frame))
        .ok_or_else(overflow)
}

struct SpatialSpace {
    n_p: usize,
    n_f: usize,
    /// Within-frame arrangements of `0..n_p`, lexicographic. Frame `i` uses
    /// the same table shifted by `n_p·i`.
    table: Vec<Vec<u16>>,
    /// Frame orders: block `b` of a candidate holds frame `orders[f][b]`.
    orders: Vec<Vec<u16>>,
    /// Block position of frame 0 under each order.
    first_frame_block: Vec<usize>,
    /// `(n_p!)^{n_f−1}`
    combos: u64,
}

impl SpatialSpace {
    fn new(n_p: usize, n_f: usize) -> Result<Self> {
        space_size_spatial(n_p, n_f)?;
        let table = all_zero_based(n_p);
        let orders = all_zero_based(n_f);
        let first_frame_block = orders.iter().map(|o| o.iter().position(|&x| x == 0).unwrap()).collect();
        let combos = (table.len() as u64).pow(n_f as u32 - 1);
        Ok(SpatialSpace { n_p, n_f, table, orders, first_frame_block, combos })
    }

    fn tp(&self) -> usize {
        self.table.len()
    }

    fn subsets(&self) -> u64 {
        self.orders.len() as u64 * self.combos
    }

    /// Splits a subset index into its frame order and fills `k[1..]` with the
    /// table rows of frames `2..n_f` (mixed-radix digits of the counter).
    fn decode_subset(&self, subset: u64, k: &mut [usize]) -> usize {
        let f = (subset / self.combos) as usize;
        let mut c = subset % self.combos;
        let tp = self.tp() as u64;
        for slot in k.iter_mut().skip(1) {
            *slot = (c % tp) as usize;
            c /= tp;
        }
        f
    }

    /// 1-based row for frame order `f` and per-frame table rows `k`.
    fn row(&self, f: usize, k: &[usize]) -> Vec<u16> {
        let n_p = self.n_p;
        let mut row = Vec::with_capacity(n_p * self.n_f);
        for &frame in &self.orders[f] {
            let frame = frame as usize;
            let offset = (n_p * frame) as u16 + 1;
            row.extend(self.table[k[frame]].iter().map(|&v| v + offset));
        }
        row
    }

    /// `bt[(b·n_f + i)·n_p! + k]`: agreement of frame `i` arranged by table
    /// row `k` and placed at block `b`, summed over the chosen rows.
    fn block_table(&self, agreement: &AgreementTable) -> Vec<u32> {
        let (n_p, n_f, tp) = (self.n_p, self.n_f, self.tp());
        let mut bt = vec![0u32; n_f * n_f * tp];
        for b in 0..n_f {
            for i in 0..n_f {
                for (k, arrangement) in self.table.iter().enumerate() {
                    bt[(b * n_f + i) * tp + k] = arrangement
                        .iter()
                        .enumerate()
                        .map(|(t, &v)| agreement.get(b * n_p + t, n_p * i + v as usize))
                        .sum();
                }
            }
        }
        bt
    }

    /// Scans subsets `range` and returns the local best plus the number of
    /// candidates scored.
    fn scan(&self, bt: &[u32], chosen: &ChosenRows, range: std::ops::Range<u64>) -> (Option<Best>, u64) {
        let (n_f, tp) = (self.n_f, self.tp());
        let mut k = vec![0usize; n_f];
        let mut best: Option<Best> = None;
        let mut scored = 0u64;
        for subset in range {
            let f = self.decode_subset(subset, &mut k);
            let order = &self.orders[f];
            let base: u32 = order
                .iter()
                .enumerate()
                .filter(|(_, &frame)| frame != 0)
                .map(|(b, &frame)| bt[(b * n_f + frame as usize) * tp + k[frame as usize]])
                .sum();
            let first = &bt[self.first_frame_block[f] * n_f * tp..][..tp];
            for (j, &a) in first.iter().enumerate() {
                let agreement = base + a;
                if best.as_ref().is_some_and(|b| agreement >= b.agreement) {
                    continue;
                }
                k[0] = j;
                let row = self.row(f, &k);
                if chosen.contains(&row) {
                    continue;
                }
                best = Some(Best { agreement, index: subset * tp as u64 + j as u64, row });
            }
            scored += tp as u64;
        }
        (best, scored)
    }
}

/// Greedy spatially coherent sampler.
pub fn generate_sp(params: &SamplerParams) -> Result<(PermutationSet, SamplerReport)> {
    let start = Instant::now();
    params.validate_shape()?;
    if params.mode != SamplerMode::SpatialCoherent {
        return Err(Error::invalid(format!("generate_sp needs spatial_coherent mode, got {}", params.mode)));
    }
    let space_size = space_size_spatial(params.n_p, params.n_f)?;
    if params.n as u64 > space_size {
        return Err(Error::capacity(
            format!("N = {} exceeds the spatial space for n_p={}, n_f={}", params.n, params.n_p, params.n_f),
            space_size,
            space_size,
        ));
    }
    let space = SpatialSpace::new(params.n_p, params.n_f)?;
    let len = params.row_len();

    // first row: a random within-frame arrangement per frame, frames in random order
    let mut rng = keyed(params.seed, "sampler.first_row", SamplerMode::SpatialCoherent.as_str().as_bytes());
    let k: Vec<usize> = (0..params.n_f).map(|_| rng.gen_range(0..space.tp())).collect();
    let mut frame_order: Vec<u16> = (0..params.n_f as u16).collect();
    frame_order.shuffle(&mut rng);
    let f = space.orders.iter().position(|o| *o == frame_order).unwrap();
    let first = space.row(f, &k);

    let mut agreement = AgreementTable::new(len);
    let mut chosen: ChosenRows = HashSet::with_capacity(params.n);
    let mut rows = Vec::with_capacity(params.n);
    let mut per_step_best_sum = Vec::with_capacity(params.n.saturating_sub(1));
    let mut per_step_candidates = Vec::with_capacity(params.n.saturating_sub(1));

    agreement.add(&first);
    chosen.insert(first.clone());
    rows.push(first);

    let subsets = space.subsets();
    let chunks = subsets.div_ceil(SUBSETS_PER_CHUNK);
    for _h in 2..=params.n {
        let bt = space.block_table(&agreement);
        let (best, scored) = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * SUBSETS_PER_CHUNK;
                space.scan(&bt, &chosen, lo..(lo + SUBSETS_PER_CHUNK).min(subsets))
            })
            .reduce(|| (None, 0), |(a, na), (b, nb)| (pick_best(a, b), na + nb));
        let best = best.ok_or_else(|| Error::capacity("spatial space exhausted", space_size, params.n))?;
        per_step_best_sum.push(agreement.distance_sum(best.agreement));
        per_step_candidates.push(scored);
        agreement.add(&best.row);
        chosen.insert(best.row.clone());
        rows.push(best.row);
    }

    let rows = rows.into_iter().map(Permutation::from_entries_unchecked).collect();
    let set = PermutationSet::new(rows, params.n_p, params.n_f, SamplerMode::SpatialCoherent, params.seed)?;
    let report = SamplerReport {
        mode: SamplerMode::SpatialCoherent,
        candidates_evaluated: per_step_candidates.iter().sum(),
        per_step_best_sum,
        per_step_candidates,
        wall_time: start.elapsed(),
        peak_candidate_memory_rows: space.tp() as u64,
    };
    Ok((set, report))
}

/// Result of one exhaustive greedy step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleStep {
    /// Largest summed distance to the prefix.
    pub best_sum: u64,
    /// `best_sum / prefix.len()`.
    pub best_distance: Rational,
    /// Every non-prefix row attaining `best_sum`.
    pub argmax_rows: Vec<Permutation>,
}

/// Exhaustive greedy step over the spatial space.
///
/// Materializes every block-coherent row (built independently of the
/// sampler's enumeration) and scores it with direct Hamming distances to
/// `chosen_prefix`. Rows already in the prefix are excluded, matching the
/// sampler's duplicate skipping.
pub fn oracle_sp(params: &SamplerParams, chosen_prefix: &[Permutation]) -> Result<OracleStep> {
    params.validate_shape()?;
    if chosen_prefix.is_empty() {
        return Err(Error::invalid("oracle needs at least one chosen row"));
    }
    let size = space_size_spatial(params.n_p, params.n_f)?;
    if size > ORACLE_SPACE_LIMIT {
        return Err(Error::capacity("spatial space too large for the oracle", size, ORACLE_SPACE_LIMIT));
    }
    let (n_p, n_f) = (params.n_p, params.n_f);
    if let Some(bad) = chosen_prefix.iter().find(|p| p.len() != n_p * n_f) {
        return Err(Error::invalid(format!("prefix row length {} != {}", bad.len(), n_p * n_f)));
    }
    let prefix: HashSet<&Permutation> = chosen_prefix.iter().collect();

    let within: Vec<Vec<usize>> = (0..n_p).permutations(n_p).collect();
    let mut best_sum = 0u64;
    let mut argmax_rows = Vec::new();
    for order in (0..n_f).permutations(n_f) {
        for arrangement in (0..n_f).map(|_| within.iter()).multi_cartesian_product() {
            let entries: Vec<u16> = order
                .iter()
                .flat_map(|&frame| arrangement[frame].iter().map(move |&v| (frame * n_p + v + 1) as u16))
                .collect();
            let candidate = Permutation::new(entries)?;
            if prefix.contains(&candidate) {
                continue;
            }
            let mut sum = 0u64;
            for row in chosen_prefix {
                sum += hamming(&candidate, row)? as u64;
            }
            if argmax_rows.is_empty() || sum > best_sum {
                best_sum = sum;
                argmax_rows.clear();
                argmax_rows.push(candidate);
            } else if sum == best_sum {
                argmax_rows.push(candidate);
            }
        }
    }
    if argmax_rows.is_empty() {
        return Err(Error::capacity("every spatial row is already chosen", size, chosen_prefix.len()));
    }
    Ok(OracleStep {
        best_sum,
        best_distance: Rational::new(best_sum, chosen_prefix.len() as u64),
        argmax_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::is_block_coherent;

    #[test]
    fn space_sizes() {
        assert_eq!(space_size_spatial(4, 3).unwrap(), 82_944);
        assert_eq!(space_size_spatial(2, 2).unwrap(), 8);
        assert_eq!(space_size_spatial(1, 1).unwrap(), 1);
        assert!(matches!(space_size_spatial(20, 3), Err(Error::Capacity { .. })));
        assert!(space_size_spatial(0, 3).is_err());
    }

    #[test]
    fn subset_decoding_covers_space_in_order() {
        let space = SpatialSpace::new(2, 3).unwrap();
        let mut k = vec![0; 3];
        let mut rows = Vec::new();
        for s in 0..space.subsets() {
            let f = space.decode_subset(s, &mut k);
            for j in 0..space.tp() {
                k[0] = j;
                rows.push(space.row(f, &k));
            }
        }
        assert_eq!(rows.len() as u64, space_size_spatial(2, 3).unwrap());
        let distinct: HashSet<_> = rows.iter().collect();
        assert_eq!(distinct.len(), rows.len());
        for r in &rows {
            assert!(is_block_coherent(&Permutation::new(r.clone()).unwrap(), 2, 3).unwrap());
        }
        // identity order, all-identity arrangements comes first
        assert_eq!(rows[0], vec![1, 2, 3, 4, 5, 6]);
        // frame 1 varies fastest
        assert_eq!(rows[1], vec![2, 1, 3, 4, 5, 6]);
        // then frame 2 (least significant counter digit)
        assert_eq!(rows[2], vec![1, 2, 4, 3, 5, 6]);
    }

    #[test]
    fn single_row_is_a_coherent_bijection() {
        let (set, report) = generate_sp(&SamplerParams::spatial(1, 4, 3, 7)).unwrap();
        assert_eq!(set.len(), 1);
        assert!(is_block_coherent(&set.rows()[0], 4, 3).unwrap());
        assert!(report.per_step_best_sum.is_empty());
        assert_eq!(report.candidates_evaluated, 0);
    }

    #[test]
    fn capacity_errors() {
        assert!(matches!(generate_sp(&SamplerParams::spatial(9, 2, 2, 0)), Err(Error::Capacity { .. })));
        assert!(generate_sp(&SamplerParams::spatial(8, 2, 2, 0)).is_ok());
        assert!(matches!(generate_sp(&SamplerParams::exact(2, 2, 2, 0)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn oracle_examples() {
        let params = SamplerParams::spatial(2, 2, 2, 0);
        let prefix = [Permutation::new(vec![1, 2, 3, 4]).unwrap()];
        let step = oracle_sp(&params, &prefix).unwrap();
        // [4,3,2,1] differs from the identity everywhere
        assert_eq!(step.best_sum, 4);
        assert_eq!(step.best_distance, Rational::from_integer(4));
        assert!(step.argmax_rows.contains(&Permutation::new(vec![4, 3, 2, 1]).unwrap()));
        // [2,1,4,3] plus all four rows with the frames swapped
        assert_eq!(step.argmax_rows.len(), 5);
        assert!(oracle_sp(&params, &[]).is_err());
    }

    #[test]
    fn oracle_refuses_large_spaces() {
        let params = SamplerParams::spatial(2, 5, 2, 0);
        let prefix = [Permutation::identity(10).unwrap()];
        assert!(oracle_sp(&params, &prefix).is_ok()); // 28800 rows
        let params = SamplerParams::spatial(2, 5, 3, 0);
        let prefix = [Permutation::identity(15).unwrap()];
        assert!(matches!(oracle_sp(&params, &prefix), Err(Error::Capacity { .. })));
    }
}
