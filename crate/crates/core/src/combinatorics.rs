//! Binomial counts and lexicographic k-subset enumeration.

use crate::error::{Error, Result};

/// Default cap on the number of subsets any enumeration may visit.
pub const DEFAULT_SUBSET_CAP: u128 = 1_000_000;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `sum_{s=0..=k} C(n, s)`, saturating.
pub fn binomial_prefix_sum(n: usize, k: usize) -> u128 {
    (0..=k.min(n)).fold(0u128, |acc, s| acc.saturating_add(binomial(n, s)))
}

/// Number of subsets of `{0..n}` whose size lies in `sizes`.
pub fn count_subsets(n: usize, sizes: impl IntoIterator<Item = usize>) -> u128 {
    sizes
        .into_iter()
        .fold(0u128, |acc, k| acc.saturating_add(binomial(n, k)))
}

pub fn check_cap(count: u128, cap: u128) -> Result<()> {
    if count > cap {
        Err(Error::CapExceeded { count, cap })
    } else {
        Ok(())
    }
}

/// Iterator over all `k`-subsets of `{0, .., n-1}` in lexicographic order.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            current: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.current[i] < self.n - k + i {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Subsets of `{0..n}` with size in `sizes`, by ascending size then lexicographically.
pub fn subsets_by_size(
    n: usize,
    sizes: std::ops::RangeInclusive<usize>,
) -> impl Iterator<Item = Vec<usize>> {
    sizes.flat_map(move |k| Combinations::new(n, k))
}

/// Sorted complement of `set` within `{0..n}`.
pub fn complement(n: usize, set: &[usize]) -> Vec<usize> {
    let mut mask = vec![false; n];
    for &i in set {
        mask[i] = true;
    }
    (0..n).filter(|&i| !mask[i]).collect()
}

/// Map a subset of positions within `base` back to the elements of `base`.
pub fn select(base: &[usize], positions: &[usize]) -> Vec<usize> {
    positions.iter().map(|&j| base[j]).collect()
}
