//! Sparse suffix tree for arbitrary chosen suffixes.
//!
//! Each suffix is summarized by a sortable tuple: the rank of its
//! `4 tau + 1`-window, and either the rank of its anchoring set suffix (when
//! a set position lies within `3 tau`) or, inside long periodic runs, the
//! signed offset of the first period break past the anchor together with the
//! rank of the break window. Sorting the tuples sorts the suffixes; the tree
//! is then assembled from adjacent longest common extensions.

use thiserror::Error;

use crate::lce::{LceError, LceIndex};
use crate::sst::{Node, SparseTree, ROOT};
use crate::text::{Text, TextView};

#[derive(Debug, Error)]
pub enum SstUserError {
    #[error("duplicate suffix position {0}")]
    Duplicate(usize),
    #[error("suffix position {0} outside the text of length {1}")]
    OutOfRange(usize, usize),
    #[error(transparent)]
    Lce(#[from] LceError),
}

/// Minimal period via the border array of the range.
pub fn minimal_period(symbols: &[i64]) -> usize {
    let n = symbols.len();
    assert!(n > 0, "minimal period of an empty range");
    let mut border = vec![0usize; n];
    for i in 1..n {
        let mut b = border[i - 1];
        loop {
            if symbols[i] == symbols[b] {
                border[i] = b + 1;
                break;
            }
            if b == 0 {
                border[i] = 0;
                break;
            }
            b = border[b - 1];
        }
    }
    n - border[n - 1]
}

/// Sort key of one chosen suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct SuffixTuple {
    /// Rank of the `4 tau + 1`-window at the suffix start.
    window_rank: usize,
    /// Signed break offset; 0 in the anchored case.
    break_offset: i64,
    /// Rank of the `tau + 1`-window at the period break; 0 when anchored.
    break_rank: usize,
    /// Rank of the anchoring set suffix among all set suffixes.
    anchor_rank: usize,
}

fn rank_windows(view: TextView, starts: &[usize], len: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..starts.len()).collect();
    let cmp = |&a: &usize, &b: &usize| {
        for d in 0..len {
            let (x, y) = (view.get(starts[a] + d), view.get(starts[b] + d));
            if x != y {
                return x.cmp(&y);
            }
        }
        std::cmp::Ordering::Equal
    };
    order.sort_by(cmp);
    let mut ranks = vec![0usize; starts.len()];
    let mut r = 0usize;
    for i in 0..order.len() {
        if i > 0 && cmp(&order[i - 1], &order[i]) != std::cmp::Ordering::Equal {
            r += 1;
        }
        ranks[order[i]] = r;
    }
    ranks
}

/// Build the compacted trie over the chosen suffixes, using the index's
/// partitioning set for anchoring and its tree for final extensions.
pub fn build_user_sst(
    text: &Text,
    suffixes: &[usize],
    index: &LceIndex,
) -> Result<SparseTree, SstUserError> {
    let n = text.len();
    let tau = index.tau();
    let view = TextView::whole(text);
    {
        let mut seen = suffixes.to_vec();
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(SstUserError::Duplicate(w[0]));
            }
        }
        if let Some(&worst) = seen.last() {
            if worst >= n {
                return Err(SstUserError::OutOfRange(worst, n));
            }
        }
    }

    // anchor ranks: left-to-right order of set suffixes in the core tree
    let set_rank: std::collections::HashMap<usize, usize> = index
        .tree()
        .leaves_in_order()
        .into_iter()
        .enumerate()
        .map(|(r, p)| (p, r + 1))
        .collect();

    let window_ranks = rank_windows(view, suffixes, 4 * tau + 1);

    // classify each suffix; collect break windows of the unanchored ones
    struct Pending {
        suffix: usize,
        window_rank: usize,
        anchor: Option<usize>,
        break_pos: Option<usize>,
        break_down: bool,
    }
    let mut pending: Vec<Pending> = Vec::with_capacity(suffixes.len());
    let mut break_positions: Vec<usize> = Vec::new();
    for (ell, &start) in suffixes.iter().enumerate() {
        let anchor = index.successor(start + tau);
        let mut p = Pending {
            suffix: start,
            window_rank: window_ranks[ell],
            anchor,
            break_pos: None,
            break_down: false,
        };
        if let Some(a) = anchor {
            if a > start + 3 * tau {
                // long anchor distance: the stretch up to the anchor is
                // periodic with a short period; the first break past the
                // anchor is close
                let range: Vec<i64> = (start + tau..=a).map(|i| view.get(i)).collect();
                let period = minimal_period(&range);
                debug_assert!(period <= tau / 4, "density contract violated before {a}");
                let mut t = a + 1;
                while view.get(t) == view.get(t - period) {
                    t += 1;
                }
                debug_assert!(t <= a + tau, "period break farther than one window");
                p.break_pos = Some(t);
                p.break_down = view.get(t) < view.get(t - period);
                break_positions.push(t);
            }
        } else {
            // no set position at or past start + tau: the suffix is short
            // and its padded window rank already orders it exactly
            debug_assert!(n - start <= tau + tau);
        }
        pending.push(p);
    }
    let break_ranks = rank_windows(view, &break_positions, tau + 1);

    let mut tuples: Vec<(SuffixTuple, usize)> = Vec::with_capacity(suffixes.len());
    let mut next_break = 0usize;
    for p in &pending {
        let tuple = match (p.anchor, p.break_pos) {
            (Some(a), None) => SuffixTuple {
                window_rank: p.window_rank,
                break_offset: 0,
                break_rank: 0,
                anchor_rank: set_rank[&a],
            },
            (Some(a), Some(t)) => {
                let rank = break_ranks[next_break] + 1;
                next_break += 1;
                // signed magnitude t - suffix - n, negated on upward breaks
                let magnitude = t as i64 - p.suffix as i64 - n as i64;
                SuffixTuple {
                    window_rank: p.window_rank,
                    break_offset: if p.break_down { magnitude } else { -magnitude },
                    break_rank: rank,
                    anchor_rank: set_rank[&a],
                }
            }
            (None, _) => SuffixTuple {
                window_rank: p.window_rank,
                break_offset: 0,
                break_rank: 0,
                anchor_rank: 0,
            },
        };
        tuples.push((tuple, p.suffix));
    }
    tuples.sort();

    let sorted: Vec<usize> = tuples.iter().map(|&(_, s)| s).collect();
    let mut lcps: Vec<usize> = Vec::with_capacity(sorted.len().saturating_sub(1));
    for w in sorted.windows(2) {
        lcps.push(index.lce(w[0], w[1])?);
    }
    Ok(assemble_from_sorted(view, &sorted, &lcps))
}

/// Stack construction of a compacted trie from sorted suffixes and adjacent
/// extensions (tree semantics identical to the core builder's).
fn assemble_from_sorted(view: TextView, sorted: &[usize], lcps: &[usize]) -> SparseTree {
    let mut nodes = vec![Node {
        parent: usize::MAX,
        edge_start: 0,
        edge_len: 0,
        depth: 0,
        children: Vec::new(),
        leaf_pos: None,
    }];
    let mut stack: Vec<usize> = vec![ROOT];
    for (i, &pos) in sorted.iter().enumerate() {
        let lcp = if i == 0 { 0 } else { lcps[i - 1] };
        let mut last_popped: Option<usize> = None;
        while nodes[*stack.last().unwrap()].depth > lcp {
            last_popped = stack.pop();
        }
        let top = *stack.last().unwrap();
        let attach = if nodes[top].depth == lcp {
            top
        } else {
            let child = last_popped.expect("depth gap implies a popped child");
            let mid = nodes.len();
            let child_es = nodes[child].edge_start;
            let split_off = lcp - nodes[top].depth;
            nodes.push(Node {
                parent: top,
                edge_start: child_es,
                edge_len: split_off,
                depth: lcp,
                children: vec![child],
                leaf_pos: None,
            });
            let slot = nodes[top].children.iter().position(|&c| c == child).unwrap();
            nodes[top].children[slot] = mid;
            nodes[child].parent = mid;
            nodes[child].edge_start = child_es + split_off;
            nodes[child].edge_len -= split_off;
            stack.push(mid);
            mid
        };
        let leaf_depth = view.end() - pos + 1;
        let leaf = nodes.len();
        nodes.push(Node {
            parent: attach,
            edge_start: pos + lcp,
            edge_len: leaf_depth - lcp,
            depth: leaf_depth,
            children: Vec::new(),
            leaf_pos: Some(pos),
        });
        nodes[attach].children.push(leaf);
        stack.push(leaf);
    }
    SparseTree::from_parts(nodes, view.end())
}
