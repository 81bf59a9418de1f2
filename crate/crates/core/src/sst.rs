//! Compacted tries over chosen suffixes ("sparse suffix trees") with
//! constant-time lowest-common-ancestor support.
//!
//! The builder takes a sorted position set that is locally consistent and
//! forward synchronized for some window parameter `builder_tau`: it covers
//! the text with substrings of length `2 * builder_tau + 1` anchored at the
//! positions, ranks them, suffix-sorts the rank string, and refines branch
//! points with short text scans. Suffixes are padded with one sentinel so no
//! suffix is a prefix of another.

use std::collections::VecDeque;

use thiserror::Error;

use crate::suffix::{lcp_array, suffix_array, RangeMin};
use crate::text::TextView;

#[derive(Debug, Error)]
pub enum SstError {
    #[error("positions must be strictly increasing (violation at index {0})")]
    Unsorted(usize),
    #[error("position {0} outside the text view of length {1}")]
    OutOfRange(usize, usize),
}

#[derive(Debug, Clone)]
pub struct Node {
    /// `usize::MAX` for the root.
    pub parent: usize,
    /// Edge label from the parent: `text[edge_start .. edge_start + edge_len)`
    /// under the view's sentinel convention.
    pub edge_start: usize,
    pub edge_len: usize,
    /// String depth: total label length from the root.
    pub depth: usize,
    /// Ordered by first label symbol, sentinel smallest.
    pub children: Vec<usize>,
    pub leaf_pos: Option<usize>,
}

pub struct SparseTree {
    pub nodes: Vec<Node>,
    /// Exclusive end of the view the tree was built over; leaf string depth
    /// is `view_end - pos + 1` (one sentinel).
    pub view_end: usize,
    /// `(suffix position, node id)`, sorted by position.
    leaves_by_pos: Vec<(usize, usize)>,
    lca: Lca,
}

pub const ROOT: usize = 0;

impl SparseTree {
    /// Assemble a tree from prebuilt nodes (used by independently
    /// constructed reference tries).
    pub fn from_parts(nodes: Vec<Node>, view_end: usize) -> Self {
        let mut leaves_by_pos: Vec<(usize, usize)> = nodes
            .iter()
            .enumerate()
            .filter_map(|(id, n)| n.leaf_pos.map(|p| (p, id)))
            .collect();
        leaves_by_pos.sort_unstable_by_key(|&(p, _)| p);
        let lca = Lca::new(&nodes);
        SparseTree { nodes, view_end, leaves_by_pos, lca }
    }

    /// Leaf node id for a suffix position.
    pub fn leaf(&self, pos: usize) -> Option<usize> {
        self.leaves_by_pos
            .binary_search_by_key(&pos, |&(p, _)| p)
            .ok()
            .map(|i| self.leaves_by_pos[i].1)
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves_by_pos.len()
    }

    /// Suffix positions of the leaves in left-to-right (lexicographic) order.
    pub fn leaves_in_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.leaves_by_pos.len());
        let mut stack = vec![ROOT];
        while let Some(v) = stack.pop() {
            if let Some(p) = self.nodes[v].leaf_pos {
                out.push(p);
            }
            for &c in self.nodes[v].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    pub fn lca(&self, a: usize, b: usize) -> usize {
        self.lca.query(a, b)
    }

    /// Longest common extension of two indexed suffixes via the LCA string
    /// depth; `None` if either position is not indexed.
    pub fn lca_lce(&self, p: usize, q: usize) -> Option<usize> {
        if p == q {
            let _ = self.leaf(p)?;
            return Some(self.view_end - p);
        }
        let a = self.leaf(p)?;
        let b = self.leaf(q)?;
        Some(self.nodes[self.lca(a, b)].depth)
    }

    /// One node per line in pre-order: `node <id> parent <pid> edge <start>
    /// <len>`, with ` leaf <suffix_pos>` appended on leaves. Ids are
    /// pre-order numbers; the root prints parent -1 and an empty edge.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut pre_id = vec![usize::MAX; self.nodes.len()];
        let mut next = 0usize;
        let mut stack = vec![ROOT];
        while let Some(v) = stack.pop() {
            pre_id[v] = next;
            next += 1;
            let node = &self.nodes[v];
            let pid = if node.parent == usize::MAX {
                -1i64
            } else {
                pre_id[node.parent] as i64
            };
            out.push_str(&format!(
                "node {} parent {} edge {} {}",
                pre_id[v], pid, node.edge_start, node.edge_len
            ));
            if let Some(p) = node.leaf_pos {
                out.push_str(&format!(" leaf {p}"));
            }
            out.push('\n');
            for &c in node.children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }
}

/// Euler tour + sparse-table range minimum over tour levels.
struct Lca {
    tour: Vec<u32>,
    first: Vec<u32>,
    rmq: RangeMin,
}

impl Lca {
    fn new(nodes: &[Node]) -> Self {
        let n = nodes.len();
        let mut tour: Vec<u32> = Vec::with_capacity(2 * n);
        let mut levels: Vec<u32> = Vec::with_capacity(2 * n);
        let mut first = vec![u32::MAX; n];
        // iterative Euler tour: (node, level, next child index)
        let mut stack: Vec<(usize, u32, usize)> = vec![(ROOT, 0, 0)];
        while let Some(&mut (v, lvl, ref mut ci)) = stack.last_mut() {
            if *ci == 0 {
                first[v] = tour.len() as u32;
            }
            tour.push(v as u32);
            levels.push(lvl);
            if *ci < nodes[v].children.len() {
                let c = nodes[v].children[*ci];
                *ci += 1;
                stack.push((c, lvl + 1, 0));
            } else {
                stack.pop();
            }
        }
        Lca { tour, first, rmq: RangeMin::new(levels) }
    }

    fn query(&self, a: usize, b: usize) -> usize {
        let (mut l, mut r) = (self.first[a] as usize, self.first[b] as usize);
        if l > r {
            std::mem::swap(&mut l, &mut r);
        }
        self.tour[self.rmq.argmin(l, r)] as usize
    }
}

/// Build the compacted trie over the suffixes starting at `positions`
/// (strictly increasing). The caller asserts that the set is locally
/// consistent and forward synchronized for `builder_tau`.
pub fn build_sparse_tree(
    view: TextView,
    positions: &[usize],
    builder_tau: usize,
) -> Result<SparseTree, SstError> {
    assert!(builder_tau >= 1);
    for (i, w) in positions.windows(2).enumerate() {
        if w[0] >= w[1] {
            return Err(SstError::Unsorted(i + 1));
        }
    }
    if let Some(&last) = positions.last() {
        if last >= view.end() {
            return Err(SstError::OutOfRange(last, view.end()));
        }
    }
    if positions.is_empty() {
        let root = Node {
            parent: usize::MAX,
            edge_start: 0,
            edge_len: 0,
            depth: 0,
            children: Vec::new(),
            leaf_pos: None,
        };
        return Ok(SparseTree::from_parts(vec![root], view.end()));
    }

    let window_len = 2 * builder_tau + 1;
    // covering substring starts: every position plus builder_tau-strides up
    // to the next position (or the view end after the last one)
    let mut starts: Vec<usize> = Vec::new();
    let mut retained_flag: Vec<bool> = Vec::new();
    for (k, &p) in positions.iter().enumerate() {
        let until = if k + 1 < positions.len() { positions[k + 1] } else { view.end() };
        let mut from = p;
        while from < until || from == p {
            starts.push(from);
            retained_flag.push(from == p);
            from += builder_tau;
        }
    }
    debug_assert!(starts.windows(2).all(|w| w[0] < w[1] && w[1] - w[0] <= builder_tau));

    // rank the covering substrings by content
    let order = multikey_sort(view, &starts, window_len);
    let mut rank_of = vec![0u32; starts.len()];
    let mut next_rank = 0u32;
    for (oi, &h) in order.iter().enumerate() {
        if oi > 0 {
            let prev = order[oi - 1];
            if !view.windows_equal(starts[prev], starts[h], window_len) {
                next_rank += 1;
            }
        }
        rank_of[h] = next_rank;
    }

    // suffix structure over the rank string
    let sa = suffix_array(&rank_of);
    let lcp = lcp_array(&rank_of, &sa);

    // retained suffixes in lexicographic rank order; adjacent rank-lcp is
    // the min over the lcp array between their slots
    let mut sorted_positions: Vec<usize> = Vec::with_capacity(positions.len());
    let mut rank_lcps: Vec<usize> = Vec::new(); // between consecutive retained
    let mut run_min = usize::MAX;
    let mut seen_any = false;
    for (slot, &h) in sa.iter().enumerate() {
        if slot > 0 {
            run_min = run_min.min(lcp[slot]);
        }
        if retained_flag[h] {
            if seen_any {
                rank_lcps.push(run_min);
            }
            seen_any = true;
            run_min = usize::MAX;
            sorted_positions.push(starts[h]);
        }
    }

    // translate rank-lcps to text-lcps with one short scan per adjacent pair
    let mut starts_index = std::collections::HashMap::new();
    for (h, &st) in starts.iter().enumerate() {
        starts_index.insert(st, h);
    }
    let mut text_lcps: Vec<usize> = Vec::with_capacity(rank_lcps.len());
    for (i, &ell) in rank_lcps.iter().enumerate() {
        let a = sorted_positions[i];
        let b = sorted_positions[i + 1];
        let ha = starts_index[&a];
        let hb = starts_index[&b];
        debug_assert!(ha + ell < starts.len() && hb + ell < starts.len());
        let (fa, fb) = (starts[ha + ell], starts[hb + ell]);
        // the rank prefix guarantees alignment of the covering strides
        debug_assert_eq!(fa - a, fb - b);
        debug_assert!(ell == 0 || view.windows_equal(a, b, fa - a));
        let sub = view.capped_lce(fa, fb, window_len);
        debug_assert!(sub < window_len, "ranks differ at offset {ell} so windows must differ");
        text_lcps.push((fa - a) + sub);
    }

    let nodes = assemble(view, &sorted_positions, &text_lcps);
    Ok(SparseTree::from_parts(nodes, view.end()))
}

/// Ternary multikey quicksort of window starts by window content. The
/// equal-to-pivot part advances by iteration, so a long shared prefix never
/// deepens the recursion; only the strictly smaller side groups recurse.
fn multikey_sort(view: TextView, starts: &[usize], len: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..starts.len()).collect();
    fn rec(view: TextView, starts: &[usize], mut idx: &mut [usize], mut depth: usize, len: usize) {
        while idx.len() > 1 && depth < len {
            let pivot = view.get(starts[idx[idx.len() / 2]] + depth);
            // three-way partition by the symbol at `depth`
            let (mut lo, mut i, mut hi) = (0usize, 0usize, idx.len());
            while i < hi {
                let c = view.get(starts[idx[i]] + depth);
                match c.cmp(&pivot) {
                    std::cmp::Ordering::Less => {
                        idx.swap(lo, i);
                        lo += 1;
                        i += 1;
                    }
                    std::cmp::Ordering::Equal => i += 1,
                    std::cmp::Ordering::Greater => {
                        hi -= 1;
                        idx.swap(i, hi);
                    }
                }
            }
            let (below, rest) = idx.split_at_mut(lo);
            let (equal, above) = rest.split_at_mut(hi - lo);
            rec(view, starts, below, depth, len);
            rec(view, starts, above, depth, len);
            idx = equal;
            depth += 1;
        }
    }
    rec(view, starts, &mut idx, 0, len);
    idx
}

/// Left-to-right stack construction of a compacted trie from sorted suffixes
/// and their adjacent longest common prefixes.
fn assemble(view: TextView, sorted_positions: &[usize], adjacent_lcps: &[usize]) -> Vec<Node> {
    let mut nodes = vec![Node {
        parent: usize::MAX,
        edge_start: 0,
        edge_len: 0,
        depth: 0,
        children: Vec::new(),
        leaf_pos: None,
    }];
    let mut stack: VecDeque<usize> = VecDeque::new(); // rightmost path, root first
    stack.push_back(ROOT);
    for (i, &pos) in sorted_positions.iter().enumerate() {
        let lcp = if i == 0 { 0 } else { adjacent_lcps[i - 1] };
        let mut last_popped: Option<usize> = None;
        while nodes[*stack.back().unwrap()].depth > lcp {
            last_popped = stack.pop_back();
        }
        let top = *stack.back().unwrap();
        let attach = if nodes[top].depth == lcp {
            top
        } else {
            // split the edge to `last_popped` at depth `lcp`
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
            let slot = nodes[top]
                .children
                .iter()
                .position(|&c| c == child)
                .expect("child listed under parent");
            nodes[top].children[slot] = mid;
            nodes[child].parent = mid;
            nodes[child].edge_start = child_es + split_off;
            nodes[child].edge_len -= split_off;
            stack.push_back(mid);
            mid
        };
        let leaf_depth = view.end() - pos + 1; // one sentinel terminator
        debug_assert!(lcp < leaf_depth);
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
        stack.push_back(leaf);
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{Text, TextView};

    fn tree_for(s: &[u8], positions: &[usize], tau: usize) -> (Text, Vec<usize>) {
        let t = Text::load(s, crate::text::Format::Bytes).unwrap();
        let tree = build_sparse_tree(TextView::whole(&t), positions, tau).unwrap();
        let order = tree.leaves_in_order();
        (t, order)
    }

    #[test]
    fn single_position() {
        let t = Text::load(b"abcabc", crate::text::Format::Bytes).unwrap();
        let tree = build_sparse_tree(TextView::whole(&t), &[2], 4).unwrap();
        assert_eq!(tree.nodes.len(), 2);
        assert_eq!(tree.num_leaves(), 1);
        assert_eq!(tree.nodes[ROOT].children.len(), 1);
        assert_eq!(tree.lca_lce(2, 2), Some(4));
    }

    #[test]
    fn empty_positions() {
        let t = Text::load(b"ab", crate::text::Format::Bytes).unwrap();
        let tree = build_sparse_tree(TextView::whole(&t), &[], 4).unwrap();
        assert_eq!(tree.nodes.len(), 1);
    }

    #[test]
    fn rejects_unsorted() {
        let t = Text::load(b"abcd", crate::text::Format::Bytes).unwrap();
        assert!(build_sparse_tree(TextView::whole(&t), &[2, 1], 4).is_err());
        assert!(build_sparse_tree(TextView::whole(&t), &[1, 1], 4).is_err());
    }

    #[test]
    fn leaf_order_is_suffix_order_dense() {
        // all suffixes of a small text: order must match naive suffix sort
        let s = b"mississippi";
        let all: Vec<usize> = (0..s.len()).collect();
        let (t, order) = tree_for(s, &all, 4);
        let mut expect: Vec<usize> = all.clone();
        expect.sort_by(|&a, &b| {
            let mut l = 0;
            loop {
                let (x, y) = (t.get(a + l), t.get(b + l));
                if x != y {
                    return x.cmp(&y);
                }
                l += 1;
            }
        });
        assert_eq!(order, expect);
    }

    #[test]
    fn equal_suffix_prefixes_branch_at_sentinel() {
        // positions 0 and 2 of "aba": suffixes "aba$" and "a$" share "a"
        let (_, order) = tree_for(b"aba", &[0, 2], 4);
        assert_eq!(order, vec![2, 0]); // shorter suffix first (sentinel smallest)
    }

    #[test]
    fn lca_lce_matches_naive_random() {
        let mut rng = crate::corpus::SplitMix64::new(11);
        for round in 0..20 {
            let n = 32 + rng.below(200) as usize;
            let sigma = 1 + rng.below(3) as u32;
            let t = crate::corpus::text_of(crate::corpus::random(n, sigma, round));
            let step = 1 + rng.below(4) as usize;
            let positions: Vec<usize> = (0..n).step_by(step).collect();
            let view = TextView::whole(&t);
            let tree = build_sparse_tree(view, &positions, 4).unwrap();
            for &p in &positions {
                for &q in &positions {
                    let mut l = 0;
                    while view.get(p + l) == view.get(q + l) && p + l < n && q + l < n {
                        l += 1;
                    }
                    let expect = if p == q { n - p } else { l };
                    assert_eq!(tree.lca_lce(p, q), Some(expect), "p={p} q={q}");
                }
            }
        }
    }

    #[test]
    fn serialization_shape() {
        let t = Text::load(b"abab", crate::text::Format::Bytes).unwrap();
        let tree = build_sparse_tree(TextView::whole(&t), &[0, 1, 2, 3], 4).unwrap();
        let s = tree.serialize();
        let first = s.lines().next().unwrap();
        assert_eq!(first, "node 0 parent -1 edge 0 0");
        assert_eq!(s.lines().count(), tree.nodes.len());
        for line in s.lines().skip(1) {
            assert!(line.starts_with("node "));
        }
    }
}
