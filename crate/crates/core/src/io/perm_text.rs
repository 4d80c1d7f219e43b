//! Permutation-matrix text format.
//!
//! ```text
//! n_p n_f N mode seed
//! <N lines of n_p·n_f space-separated 1-based values>
//! ```
//!
//! UTF-8, LF line endings, single spaces, trailing LF. Only the canonical
//! byte form is accepted, so reading and rewriting a file is bit-exact.

use std::path::Path;

use crate::error::{Error, Result};
use crate::perm::{Permutation, PermutationSet, SamplerMode};

pub fn to_text(set: &PermutationSet) -> String {
    let mut out = format!("{} {} {} {} {}\n", set.n_p(), set.n_f(), set.len(), set.mode(), set.seed());
    for row in set.rows() {
        out.push_str(&row.to_string());
        out.push('\n');
    }
    out
}

pub fn from_text(text: &str) -> Result<PermutationSet> {
    let set = parse(text)?;
    if to_text(&set) != text {
        return Err(Error::Format("permutation file is not in canonical form".into()));
    }
    Ok(set)
}

fn parse(text: &str) -> Result<PermutationSet> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty permutation file".into()))?;
    let fields: Vec<&str> = header.split(' ').collect();
    let [n_p, n_f, n, mode, seed] = fields[..] else {
        return Err(Error::Format(format!("header {header:?} must have 5 fields")));
    };
    let num = |s: &str, what: &str| -> Result<u64> {
        s.parse::<u64>().map_err(|_| Error::Format(format!("bad {what} {s:?} in header")))
    };
    let n_p = num(n_p, "n_p")? as usize;
    let n_f = num(n_f, "n_f")? as usize;
    let n = num(n, "N")? as usize;
    let mode: SamplerMode = mode.parse().map_err(|_| Error::Format(format!("unknown mode {mode:?}")))?;
    let seed = num(seed, "seed")?;
    let len = n_p
        .checked_mul(n_f)
        .filter(|&l| l > 0 && l <= u16::MAX as usize)
        .ok_or_else(|| Error::Format("n_p·n_f out of range".into()))?;

    let mut rows = Vec::with_capacity(n.min(1 << 20));
    for (i, line) in lines.enumerate() {
        let values = line
            .split(' ')
            .map(|t| t.parse::<u16>().map_err(|_| Error::Format(format!("row {}: bad value {t:?}", i + 1))))
            .collect::<Result<Vec<u16>>>()?;
        if values.len() != len {
            return Err(Error::Format(format!("row {} has {} values, expected {len}", i + 1, values.len())));
        }
        rows.push(Permutation::new(values).map_err(|e| Error::Format(format!("row {}: {e}", i + 1)))?);
    }
    if rows.len() != n {
        return Err(Error::Format(format!("header declares {n} rows, found {}", rows.len())));
    }
    PermutationSet::new(rows, n_p, n_f, mode, seed).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_perm_file(set: &PermutationSet, path: &Path) -> Result<()> {
    super::write_file(path, to_text(set).as_bytes())
}

pub fn read_perm_file(path: &Path) -> Result<PermutationSet> {
    from_text(&super::read_text(path)?)
}
