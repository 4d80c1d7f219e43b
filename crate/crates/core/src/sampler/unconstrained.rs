//! Unconstrained baseline: greedy selection over all `L!` permutations of the
//! `L = n_p·n_f` patches, ignoring frame boundaries.
//!
//! Exact mode streams the whole space every step in lexicographic order. The
//! space is cut into chunks sharing a fixed prefix; a chunk is located by
//! unranking its first permutation and its suffixes are then walked
//! depth-first, so memory per worker is one row. Pool mode scores a fixed,
//! seeded sample of distinct permutations instead.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::lex::{factorial, unrank_into, MAX_FACTORIAL_ARG};
use super::{pick_best, AgreementTable, Best, ChosenRows, SamplerParams, SamplerReport};
use crate::error::{Error, Result};
use crate::perm::{Permutation, PermutationSet, SamplerMode};
use crate::rng::keyed;

/// Chunks hold at most this many permutations.
const CHUNK_TARGET: u64 = 1 << 22;
const POOL_CHUNK: usize = 4096;

/// `L!` for `L = n_p·n_f`.
pub fn space_size_unconstrained(len: usize) -> Result<u64> {
    if len == 0 {
        return Err(Error::invalid("length must be at least 1"));
    }
    factorial(len).ok_or_else(|| Error::capacity(format!("{len}! overflows 64 bits"), "overflow", u64::MAX))
}

/// Greedy unconstrained sampler (exact or pool mode).
pub fn generate_orig(params: &SamplerParams) -> Result<(PermutationSet, SamplerReport)> {
    let start = Instant::now();
    params.validate_shape()?;
    let len = params.row_len();
    let space = space_size_unconstrained(len)?;
    if params.n as u64 > space {
        return Err(Error::capacity(format!("N = {} exceeds {len}!", params.n), space, space));
    }
    let mut searcher = match params.mode {
        SamplerMode::UnconstrainedExact => {
            if space > params.budget {
                return Err(Error::capacity(
                    format!("exact enumeration of {len}! candidates per step exceeds the budget"),
                    space,
                    params.budget,
                ));
            }
            Searcher::Exact(ExactSpace::new(len))
        }
        SamplerMode::UnconstrainedPool => {
            if params.pool_size < params.n {
                return Err(Error::invalid(format!(
                    "pool size {} is smaller than N = {}",
                    params.pool_size, params.n
                )));
            }
            if params.pool_size as u64 > space {
                return Err(Error::invalid(format!("pool size {} exceeds {len}! = {space}", params.pool_size)));
            }
            Searcher::Pool(draw_pool(params.seed, len, params.pool_size))
        }
        SamplerMode::SpatialCoherent => {
            return Err(Error::invalid("generate_orig needs an unconstrained mode"));
        }
    };

    let mut rng = keyed(params.seed, "sampler.first_row", params.mode.as_str().as_bytes());
    let mut first: Vec<u16> = (1..=len as u16).collect();
    first.shuffle(&mut rng);

    let mut agreement = AgreementTable::new(len);
    let mut chosen: ChosenRows = HashSet::with_capacity(params.n);
    let mut rows = Vec::with_capacity(params.n);
    let mut per_step_best_sum = Vec::with_capacity(params.n.saturating_sub(1));
    let mut per_step_candidates = Vec::with_capacity(params.n.saturating_sub(1));
    agreement.add(&first);
    chosen.insert(first.clone());
    rows.push(first);

    for _h in 2..=params.n {
        let (best, scored) = searcher.step(&agreement, &chosen);
        let best = best.ok_or_else(|| Error::capacity("candidate space exhausted", space, params.n))?;
        per_step_best_sum.push(agreement.distance_sum(best.agreement));
        per_step_candidates.push(scored);
        agreement.add(&best.row);
        chosen.insert(best.row.clone());
        rows.push(best.row);
    }

    let peak = match &searcher {
        Searcher::Exact(_) => 1,
        Searcher::Pool(pool) => pool.len() as u64,
    };
    let rows = rows.into_iter().map(Permutation::from_entries_unchecked).collect();
    let set = PermutationSet::new(rows, params.n_p, params.n_f, params.mode, params.seed)?;
    let report = SamplerReport {
        mode: params.mode,
        candidates_evaluated: per_step_candidates.iter().sum(),
        per_step_best_sum,
        per_step_candidates,
        wall_time: start.elapsed(),
        peak_candidate_memory_rows: peak,
    };
    Ok((set, report))
}

enum Searcher {
    Exact(ExactSpace),
    Pool(Vec<Vec<u16>>),
}

impl Searcher {
    fn step(&mut self, agreement: &AgreementTable, chosen: &ChosenRows) -> (Option<Best>, u64) {
        match self {
            Searcher::Exact(space) => space.step(agreement, chosen),
            Searcher::Pool(pool) => pool_step(pool, agreement, chosen),
        }
    }
}

struct ExactSpace {
    len: usize,
    /// Number of leading positions fixed per chunk.
    prefix_len: usize,
    chunk_size: u64,
    chunks: u64,
}

impl ExactSpace {
    fn new(len: usize) -> Self {
        debug_assert!(len <= MAX_FACTORIAL_ARG);
        let prefix_len = (0..len).find(|&d| factorial(len - d).unwrap() <= CHUNK_TARGET).unwrap_or(len);
        let chunk_size = factorial(len - prefix_len).unwrap();
        let chunks = factorial(len).unwrap() / chunk_size;
        ExactSpace { len, prefix_len, chunk_size, chunks }
    }

    fn step(&self, agreement: &AgreementTable, chosen: &ChosenRows) -> (Option<Best>, u64) {
        (0..self.chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut first = vec![0u16; self.len];
                unrank_into(chunk * self.chunk_size, &mut first);
                let mut walk = SuffixWalk::new(self.len, agreement.counts(), chosen);
                let mut partial = 0u32;
                for (pos, &v) in first[..self.prefix_len].iter().enumerate() {
                    walk.perm[pos] = v;
                    walk.used |= 1 << v;
                    partial += agreement.get(pos, v as usize);
                }
                walk.descend(self.prefix_len, partial);
                let best = walk.best_row.map(|row| Best {
                    agreement: walk.best,
                    index: chunk * self.chunk_size + walk.best_offset,
                    row,
                });
                (best, walk.visited)
            })
            .reduce(|| (None, 0), |(a, na), (b, nb)| (pick_best(a, b), na + nb))
    }
}

/// Depth-first lexicographic walk over the free suffix positions.
struct SuffixWalk<'a> {
    len: usize,
    counts: &'a [u32],
    chosen: &'a ChosenRows,
    perm: Vec<u16>,
    used: u32,
    best: u32,
    best_offset: u64,
    best_row: Option<Vec<u16>>,
    visited: u64,
}

impl<'a> SuffixWalk<'a> {
    fn new(len: usize, counts: &'a [u32], chosen: &'a ChosenRows) -> Self {
        SuffixWalk {
            len,
            counts,
            chosen,
            perm: vec![0; len],
            used: 0,
            best: u32::MAX,
            best_offset: 0,
            best_row: None,
            visited: 0,
        }
    }

    #[inline]
    fn count(&self, pos: usize, v: u32) -> u32 {
        self.counts[pos * self.len + v as usize]
    }

    fn descend(&mut self, depth: usize, partial: u32) {
        let len = self.len;
        let free_mask = !self.used & ((1u32 << len) - 1);
        match len - depth {
            0 => self.leaf(partial),
            1 => {
                let v = free_mask.trailing_zeros();
                self.perm[depth] = v as u16;
                self.leaf(partial + self.count(depth, v));
            }
            2 => {
                let a = free_mask.trailing_zeros();
                let b = (free_mask & (free_mask - 1)).trailing_zeros();
                let (p0, p1) = (self.row_counts(depth), self.row_counts(depth + 1));
                let scores = [
                    partial + p0[a as usize] + p1[b as usize],
                    partial + p0[b as usize] + p1[a as usize],
                ];
                self.tail(depth, scores, [[a, b], [b, a]]);
            }
            3 => {
                let a = free_mask.trailing_zeros() as usize;
                let rest = free_mask & (free_mask - 1);
                let b = rest.trailing_zeros() as usize;
                let c = (rest & (rest - 1)).trailing_zeros() as usize;
                let (p0, p1, p2) = (self.row_counts(depth), self.row_counts(depth + 1), self.row_counts(depth + 2));
                // a < b < c, orderings listed in lexicographic order
                let scores = [
                    partial + p0[a] + p1[b] + p2[c],
                    partial + p0[a] + p1[c] + p2[b],
                    partial + p0[b] + p1[a] + p2[c],
                    partial + p0[b] + p1[c] + p2[a],
                    partial + p0[c] + p1[a] + p2[b],
                    partial + p0[c] + p1[b] + p2[a],
                ];
                let (a, b, c) = (a as u32, b as u32, c as u32);
                self.tail(depth, scores, [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]);
            }
            _ => {
                let mut free = free_mask;
                while free != 0 {
                    let v = free.trailing_zeros();
                    free &= free - 1;
                    self.perm[depth] = v as u16;
                    self.used |= 1 << v;
                    self.descend(depth + 1, partial + self.count(depth, v));
                    self.used &= !(1 << v);
                }
            }
        }
    }

    #[inline]
    fn row_counts(&self, pos: usize) -> &'a [u32] {
        &self.counts[pos * self.len..(pos + 1) * self.len]
    }

    /// Handles the last `K` positions given the scores of their orderings
    /// (in lexicographic order); only improving orderings are materialized.
    #[inline(always)]
    fn tail<const K: usize, const M: usize>(&mut self, depth: usize, scores: [u32; M], orderings: [[u32; K]; M]) {
        let best = self.best;
        if scores.iter().all(|&s| s >= best) {
            self.visited += M as u64;
            return;
        }
        for (score, ordering) in scores.into_iter().zip(orderings) {
            for (t, v) in ordering.into_iter().enumerate() {
                self.perm[depth + t] = v as u16;
            }
            self.leaf(score);
        }
    }

    #[inline]
    fn leaf(&mut self, agreement: u32) {
        let offset = self.visited;
        self.visited += 1;
        if agreement >= self.best {
            return;
        }
        let row: Vec<u16> = self.perm.iter().map(|&v| v + 1).collect();
        if self.chosen.contains(&row) {
            return;
        }
        self.best = agreement;
        self.best_offset = offset;
        self.best_row = Some(row);
    }
}

/// `pool_size` distinct uniform permutations of `1..=len`, seeded.
fn draw_pool(seed: u64, len: usize, pool_size: usize) -> Vec<Vec<u16>> {
    let mut rng = keyed(seed, "sampler.pool", &(len as u64).to_le_bytes());
    let mut seen = HashSet::with_capacity(pool_size);
    let mut pool = Vec::with_capacity(pool_size);
    let mut row: Vec<u16> = (1..=len as u16).collect();
    while pool.len() < pool_size {
        row.shuffle(&mut rng);
        if seen.insert(row.clone()) {
            pool.push(row.clone());
        }
    }
    pool
}

fn pool_step(pool: &[Vec<u16>], agreement: &AgreementTable, chosen: &ChosenRows) -> (Option<Best>, u64) {
    pool.par_chunks(POOL_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut best: Option<Best> = None;
            for (i, row) in chunk.iter().enumerate() {
                let a: u32 = row.iter().enumerate().map(|(pos, &v)| agreement.get(pos, v as usize - 1)).sum();
                if best.as_ref().is_some_and(|b| a >= b.agreement) || chosen.contains(row) {
                    continue;
                }
                best = Some(Best { agreement: a, index: (c * POOL_CHUNK + i) as u64, row: row.clone() });
            }
            (best, chunk.len() as u64)
        })
        .reduce(|| (None, 0), |(a, na), (b, nb)| (pick_best(a, b), na + nb))
}
