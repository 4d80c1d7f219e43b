//! Lexicographic ranking and enumeration of permutations.

use crate::error::{Error, Result};
use crate::perm::Permutation;

/// Largest `n` with `n!` representable in a `u64`.
pub const MAX_FACTORIAL_ARG: usize = 20;

pub fn factorial(n: usize) -> Option<u64> {
    (1..=n as u64).try_fold(1u64, |acc, k| acc.checked_mul(k))
}

/// The `index`-th permutation of `1..=length` in lexicographic order.
pub fn unrank_lex(index: u64, length: usize) -> Result<Permutation> {
    if length == 0 {
        return Err(Error::invalid("length must be at least 1"));
    }
    let total = factorial(length)
        .ok_or_else(|| Error::invalid(format!("{length}! does not fit in 64 bits")))?;
    if index >= total {
        return Err(Error::invalid(format!("index {index} out of range 0..{total}")));
    }
    let mut zero_based = vec![0u16; length];
    unrank_into(index, &mut zero_based);
    Ok(Permutation::from_entries_unchecked(zero_based.into_iter().map(|v| v + 1).collect()))
}

/// Writes the 0-based lexicographic permutation of rank `index` into `out`.
/// Caller guarantees `index < out.len()!`.
pub(crate) fn unrank_into(mut index: u64, out: &mut [u16]) {
    let n = out.len();
    let mut remaining: Vec<u16> = (0..n as u16).collect();
    for (pos, slot) in out.iter_mut().enumerate() {
        let radix = factorial(n - 1 - pos).expect("caller checked range");
        let digit = (index / radix) as usize;
        index %= radix;
        *slot = remaining.remove(digit);
    }
}

/// Lexicographic rank of `p` among permutations of its length.
pub fn rank_lex(p: &Permutation) -> Result<u64> {
    let n = p.len();
    if n > MAX_FACTORIAL_ARG {
        return Err(Error::invalid(format!("{n}! does not fit in 64 bits")));
    }
    let values = p.as_slice();
    let mut rank = 0u64;
    for i in 0..n {
        let smaller_after = values[i + 1..].iter().filter(|&&v| v < values[i]).count() as u64;
        rank += smaller_after * factorial(n - 1 - i).unwrap();
    }
    Ok(rank)
}

/// All permutations of `0..n` (0-based) in lexicographic order.
pub(crate) fn all_zero_based(n: usize) -> Vec<Vec<u16>> {
    let mut current: Vec<u16> = (0..n as u16).collect();
    let mut out = Vec::with_capacity(factorial(n).unwrap_or(0) as usize);
    loop {
        out.push(current.clone());
        if !next_permutation(&mut current) {
            return out;
        }
    }
}

/// Advances `v` to its lexicographic successor; false when `v` was the last.
pub(crate) fn next_permutation(v: &mut [u16]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unrank_examples() {
        assert_eq!(unrank_lex(0, 3).unwrap().as_slice(), &[1, 2, 3]);
        assert_eq!(unrank_lex(5, 3).unwrap().as_slice(), &[3, 2, 1]);
        assert!(matches!(unrank_lex(6, 3), Err(Error::InvalidArgument(_))));
        assert!(unrank_lex(0, 21).is_err());
    }

    #[test]
    fn factorials() {
        assert_eq!(factorial(0), Some(1));
        assert_eq!(factorial(12), Some(479_001_600));
        assert_eq!(factorial(20), Some(2_432_902_008_176_640_000));
        assert_eq!(factorial(21), None);
    }

    #[test]
    fn enumeration_matches_unranking() {
        let all = all_zero_based(5);
        assert_eq!(all.len(), 120);
        for (k, p) in all.iter().enumerate() {
            let q = unrank_lex(k as u64, 5).unwrap();
            let expected: Vec<u16> = p.iter().map(|v| v + 1).collect();
            assert_eq!(q.as_slice(), &expected[..]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn rank_inverts_unrank(k in 0u64..40_320) {
            let p = unrank_lex(k, 8).unwrap();
            prop_assert_eq!(rank_lex(&p).unwrap(), k);
        }
    }
}
