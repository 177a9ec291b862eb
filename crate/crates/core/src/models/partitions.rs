//! Set partitions of `{0, .., d-1}` enumerated as restricted growth strings.
//!
//! A restricted growth string `a` of length `d` satisfies `a[0] = 0` and
//! `a[i] ≤ 1 + max(a[..i])`; element `i` belongs to block `a[i]`.

use std::collections::BTreeMap;

/// Iterator over all restricted growth strings of length `d`, in
/// lexicographic order.
#[derive(Debug, Clone)]
pub struct RestrictedGrowth {
    current: Vec<usize>,
    // prefix maxima: max_prefix[i] = max(current[..i]) for i ≥ 1
    max_prefix: Vec<usize>,
    done: bool,
}

impl RestrictedGrowth {
    pub fn new(d: usize) -> Self {
        RestrictedGrowth {
            current: vec![0; d],
            max_prefix: vec![0; d],
            done: d == 0,
        }
    }
}

impl Iterator for RestrictedGrowth {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let d = self.current.len();
        // rightmost position that can still be incremented
        let mut i = d;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.current[i] <= self.max_prefix[i] {
                self.current[i] += 1;
                for j in i + 1..d {
                    self.current[j] = 0;
                    self.max_prefix[j] = self.max_prefix[j - 1].max(self.current[j - 1]);
                }
                break;
            }
        }
        Some(out)
    }
}

/// Blocks of the partition encoded by a restricted growth string.
pub fn blocks(rgs: &[usize]) -> Vec<Vec<usize>> {
    let k = rgs.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); k];
    for (i, &b) in rgs.iter().enumerate() {
        out[b].push(i);
    }
    out
}

/// Bell number `B_d`, the number of set partitions of a `d`-set.
pub fn bell(d: usize) -> u64 {
    // Bell triangle
    let mut row = vec![1u64];
    for _ in 0..d {
        let mut next = vec![*row.last().unwrap()];
        for v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        row = next;
    }
    row[0]
}

/// Multiset of block sizes (sorted descending) with the number of partitions
/// sharing it, aggregated over the full enumeration for dimension `d`.
pub fn block_size_profile(d: usize) -> Vec<(Vec<usize>, u64)> {
    let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for rgs in RestrictedGrowth::new(d) {
        let mut sizes: Vec<usize> = blocks(&rgs).iter().map(Vec::len).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        *counts.entry(sizes).or_default() += 1;
    }
    counts.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_bell_numbers() {
        let expected = [1u64, 1, 2, 5, 15, 52, 203, 877, 4140];
        for (d, &b) in expected.iter().enumerate() {
            assert_eq!(bell(d), b);
            if d > 0 {
                assert_eq!(RestrictedGrowth::new(d).count() as u64, b, "d = {d}");
            }
        }
    }

    #[test]
    fn strings_are_valid_and_distinct() {
        let all: Vec<_> = RestrictedGrowth::new(5).collect();
        for s in &all {
            assert_eq!(s[0], 0);
            let mut mx = 0;
            for &v in &s[1..] {
                assert!(v <= mx + 1);
                mx = mx.max(v);
            }
        }
        let mut sorted = all.clone();
        sorted.dedup();
        assert_eq!(sorted.len(), all.len());
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn profile_for_three() {
        let p = block_size_profile(3);
        assert_eq!(p, vec![(vec![1, 1, 1], 1), (vec![2, 1], 3), (vec![3], 1)]);
        assert_eq!(block_size_profile(5).iter().map(|(_, c)| c).sum::<u64>(), 52);
    }
}
