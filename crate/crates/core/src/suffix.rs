//! Suffix array by prefix doubling, LCP array, and a sparse-table range
//! minimum. Shared infrastructure for whole-text LCE structures and for the
//! rank-string stage of the sparse-tree builder.

/// Suffix array of `s` (all rotations padded conceptually with a value
/// smaller than every symbol, i.e. the usual convention where a proper
/// prefix sorts first).
pub fn suffix_array<T: Ord + Copy>(s: &[T]) -> Vec<usize> {
    let n = s.len();
    if n == 0 {
        return Vec::new();
    }
    // initial ranks from symbol order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by_key(|&i| s[i]);
    let mut rank = vec![0usize; n];
    for idx in 1..n {
        rank[order[idx]] =
            rank[order[idx - 1]] + if s[order[idx]] != s[order[idx - 1]] { 1 } else { 0 };
    }
    let mut k = 1usize;
    let mut pairs: Vec<(usize, i64, i64)> = Vec::with_capacity(n);
    while k < n {
        pairs.clear();
        pairs.extend((0..n).map(|i| {
            let next = if i + k < n { rank[i + k] as i64 } else { -1 };
            (i, rank[i] as i64, next)
        }));
        pairs.sort_unstable_by_key(|&(_, a, b)| (a, b));
        let mut new_rank = vec![0usize; n];
        for idx in 1..n {
            let (i, a, b) = pairs[idx];
            let (j, pa, pb) = pairs[idx - 1];
            new_rank[i] = new_rank[j] + if (a, b) != (pa, pb) { 1 } else { 0 };
        }
        rank = new_rank;
        if rank.iter().max() == Some(&(n - 1)) {
            break;
        }
        k *= 2;
    }
    let mut sa = vec![0usize; n];
    for i in 0..n {
        sa[rank[i]] = i;
    }
    sa
}

/// Kasai LCP array: `lcp[i]` is the longest common prefix of the suffixes at
/// `sa[i - 1]` and `sa[i]`; `lcp[0] = 0`.
pub fn lcp_array<T: Eq>(s: &[T], sa: &[usize]) -> Vec<usize> {
    let n = s.len();
    let mut rank = vec![0usize; n];
    for (r, &i) in sa.iter().enumerate() {
        rank[i] = r;
    }
    let mut lcp = vec![0usize; n];
    let mut h = 0usize;
    for i in 0..n {
        if rank[i] > 0 {
            let j = sa[rank[i] - 1];
            while i + h < n && j + h < n && s[i + h] == s[j + h] {
                h += 1;
            }
            lcp[rank[i]] = h;
            h = h.saturating_sub(1);
        } else {
            h = 0;
        }
    }
    lcp
}

/// Sparse-table range minimum over a fixed array; O(1) queries.
pub struct RangeMin {
    table: Vec<Vec<u32>>,
    values: Vec<u32>,
}

impl RangeMin {
    pub fn new(values: Vec<u32>) -> Self {
        let n = values.len();
        let levels = if n <= 1 { 1 } else { 64 - (n as u64 - 1).leading_zeros() as usize };
        let mut table: Vec<Vec<u32>> = Vec::with_capacity(levels);
        table.push((0..n as u32).collect());
        let mut len = 1usize;
        while 2 * len <= n {
            let prev = table.last().unwrap();
            let mut row = Vec::with_capacity(n - 2 * len + 1);
            for i in 0..=(n - 2 * len) {
                let a = prev[i];
                let b = prev[i + len];
                row.push(if values[a as usize] <= values[b as usize] { a } else { b });
            }
            table.push(row);
            len *= 2;
        }
        RangeMin { table, values }
    }

    /// Index of a minimum value on the inclusive range `[l..=r]`.
    pub fn argmin(&self, l: usize, r: usize) -> usize {
        debug_assert!(l <= r && r < self.values.len());
        if l == r {
            return l;
        }
        let k = (usize::BITS - 1 - (r - l + 1).leading_zeros()) as usize;
        let a = self.table[k][l];
        let b = self.table[k][r + 1 - (1 << k)];
        if self.values[a as usize] <= self.values[b as usize] {
            a as usize
        } else {
            b as usize
        }
    }

    pub fn min(&self, l: usize, r: usize) -> u32 {
        self.values[self.argmin(l, r)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_sa<T: Ord>(s: &[T]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..s.len()).collect();
        idx.sort_by(|&a, &b| s[a..].cmp(&s[b..]));
        idx
    }

    #[test]
    fn sa_banana() {
        let s: Vec<u8> = b"banana".to_vec();
        assert_eq!(suffix_array(&s), naive_sa(&s));
    }

    #[test]
    fn sa_matches_naive_random() {
        let mut rng = crate::corpus::SplitMix64::new(42);
        for _ in 0..50 {
            let n = 1 + rng.below(200) as usize;
            let sigma = 1 + rng.below(4);
            let s: Vec<u32> = (0..n).map(|_| rng.below(sigma) as u32).collect();
            assert_eq!(suffix_array(&s), naive_sa(&s), "s = {s:?}");
        }
    }

    #[test]
    fn lcp_matches_naive() {
        let mut rng = crate::corpus::SplitMix64::new(7);
        for _ in 0..30 {
            let n = 2 + rng.below(150) as usize;
            let s: Vec<u32> = (0..n).map(|_| rng.below(3) as u32).collect();
            let sa = suffix_array(&s);
            let lcp = lcp_array(&s, &sa);
            for i in 1..n {
                let a = &s[sa[i - 1]..];
                let b = &s[sa[i]..];
                let expect = a.iter().zip(b).take_while(|(x, y)| x == y).count();
                assert_eq!(lcp[i], expect);
            }
        }
    }

    #[test]
    fn range_min_exhaustive_small() {
        let vals: Vec<u32> = vec![5, 3, 8, 3, 9, 1, 7];
        let rm = RangeMin::new(vals.clone());
        for l in 0..vals.len() {
            for r in l..vals.len() {
                assert_eq!(rm.min(l, r), *vals[l..=r].iter().min().unwrap());
            }
        }
    }
}
