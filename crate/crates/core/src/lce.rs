//! Longest-common-extension index over a partitioning set: a sparse suffix
//! tree with LCA over the set's suffixes, plus a successor array that finds
//! the next set position after any text position in one short walk. A query
//! either resolves within a few windows of naive comparison or jumps to the
//! tree through aligned set positions; when both sides sit deep inside
//! periodic runs, the period structure advances the query once and the next
//! round terminates.

use thiserror::Error;

use crate::sst::{build_sparse_tree, SparseTree, SstError};
use crate::text::{Text, TextView};

#[derive(Debug, Error)]
pub enum LceError {
    #[error(transparent)]
    Sst(#[from] SstError),
    #[error("query position {0} outside the text of length {1}")]
    OutOfRange(usize, usize),
}

pub struct LceIndex<'a> {
    text: &'a Text,
    tree: SparseTree,
    /// Index into `sstar` of the first set position at or after `i * tau`;
    /// `sstar.len()` when none exists.
    successor_idx: Vec<usize>,
    sstar: Vec<usize>,
    tau: usize,
}

/// Instrumentation of one query.
#[derive(Debug, Clone, Copy, Default)]
pub struct QueryTrace {
    /// Text symbols read by naive comparisons.
    pub reads: usize,
    /// Number of periodicity jumps taken (at most one).
    pub jumps: usize,
}

impl<'a> LceIndex<'a> {
    /// `sstar` must satisfy the partitioning-set contracts for `tau`.
    pub fn build(text: &'a Text, sstar: Vec<usize>, tau: usize) -> Result<Self, LceError> {
        let view = TextView::whole(text);
        let tree = build_sparse_tree(view, &sstar, tau)?;
        let buckets = text.len() / tau;
        let mut successor_idx = Vec::with_capacity(buckets.max(1));
        for i in 0..buckets.max(1) {
            successor_idx.push(sstar.partition_point(|&p| p < i * tau));
        }
        Ok(LceIndex { text, tree, successor_idx, sstar, tau })
    }

    pub fn sstar(&self) -> &[usize] {
        &self.sstar
    }

    pub fn tree(&self) -> &SparseTree {
        &self.tree
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    /// Smallest set position at or above `p`, found from the bucket entry by
    /// walking forward.
    pub fn successor(&self, p: usize) -> Option<usize> {
        let bucket = (p / self.tau).min(self.successor_idx.len().saturating_sub(1));
        let mut idx = self.successor_idx[bucket];
        while idx < self.sstar.len() && self.sstar[idx] < p {
            idx += 1;
        }
        self.sstar.get(idx).copied()
    }

    pub fn lce(&self, p: usize, q: usize) -> Result<usize, LceError> {
        Ok(self.lce_traced(p, q)?.0)
    }

    /// The query with its instrumentation.
    pub fn lce_traced(&self, p: usize, q: usize) -> Result<(usize, QueryTrace), LceError> {
        let n = self.text.len();
        if p >= n {
            return Err(LceError::OutOfRange(p, n));
        }
        if q >= n {
            return Err(LceError::OutOfRange(q, n));
        }
        let mut trace = QueryTrace::default();
        if p == q {
            return Ok((n - p, trace));
        }
        let ans = self.query_round(p, q, 0, &mut trace);
        Ok((ans, trace))
    }

    /// Count symbol comparisons; each comparison reads two symbols.
    fn compare(&self, view: TextView, a: usize, b: usize, cap: usize, trace: &mut QueryTrace) -> usize {
        let l = view.capped_lce(a, b, cap);
        trace.reads += 2 * (l + 1).min(cap);
        l
    }

    fn query_round(&self, p: usize, q: usize, depth: usize, trace: &mut QueryTrace) -> usize {
        debug_assert!(depth <= 1, "at most one periodicity jump per query");
        let view = TextView::whole(self.text);
        let tau = self.tau;
        let n = self.text.len();
        let (sp, sq) = (self.successor(p + tau), self.successor(q + tau));
        let (Some(sp), Some(sq)) = (sp, sq) else {
            // a successor is missing only near the text end; the whole
            // remaining suffix is short
            return self.compare(view, p, q, n - p.max(q), trace);
        };
        let (dp, dq) = (sp - p, sq - q);
        if dp <= 2 * tau || dq <= 2 * tau {
            let l = self.compare(view, p, q, 3 * tau + 1, trace);
            if l <= 3 * tau {
                return l;
            }
            if dp == dq {
                // aligned set positions: finish in the tree
                return dp
                    + self.tree.lca_lce(sp, sq).expect("set positions are indexed leaves");
            }
            // equality through three windows without alignment only happens
            // against the text end; finish naively
            return 3 * tau + 1 + self.compare(view, p + 3 * tau + 1, q + 3 * tau + 1, n - p.max(q), trace);
        }
        // both gaps large: the stretches up to the successors are periodic
        let l = self.compare(view, p, q, 2 * tau + 1, trace);
        if l <= 2 * tau {
            return l;
        }
        let jump = dp.min(dq) - tau;
        #[cfg(debug_assertions)]
        {
            let check = TextView::whole(self.text).capped_lce(p, q, jump);
            debug_assert_eq!(check, jump, "periodicity jump skipped a mismatch");
        }
        trace.jumps += 1;
        jump + self.query_round(p + jump, q + jump, depth + 1, trace)
    }
}
