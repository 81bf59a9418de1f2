//! Brute-force reference implementations and property checkers.
//!
//! Everything here is a direct transliteration of a definition, with no
//! optimization, and stays independent of the streaming implementations it
//! validates.

use std::fmt;

use crate::sst::{Node, SparseTree, ROOT};
use crate::text::{ParamEnv, Text, TextView};

/// Longest common prefix of the suffixes at `p` and `q`, by symbol scan
/// under the sentinel convention. `naive_lce(t, p, p) = n - p`.
pub fn naive_lce(text: &Text, p: usize, q: usize) -> usize {
    assert!(p < text.len() && q < text.len(), "positions out of range");
    if p == q {
        return text.len() - p;
    }
    let mut l = 0;
    while text.get(p + l) == text.get(q + l) {
        l += 1;
    }
    l
}

/// `min(cap, lce(p, q))` by symbol scan.
pub fn naive_capped_lce(view: TextView, p: usize, q: usize, cap: usize) -> usize {
    view.capped_lce(p, q, cap)
}

/// Minimal period by trying every candidate directly.
pub fn brute_minimal_period(symbols: &[i64]) -> usize {
    let n = symbols.len();
    assert!(n > 0);
    'outer: for p in 1..=n {
        for i in p..n {
            if symbols[i] != symbols[i - p] {
                continue 'outer;
            }
        }
        return p;
    }
    unreachable!("n is always a period")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    A,
    B,
    C,
    CConverse,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::A => write!(f, "a"),
            Property::B => write!(f, "b"),
            Property::C => write!(f, "c"),
            Property::CConverse => write!(f, "c_converse"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    /// Offset `d` for property (b); period for (c); witness position for the
    /// converse.
    pub detail: usize,
}

#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub property: Property,
    pub violations: Vec<Violation>,
    pub checked_pairs: usize,
}

impl PropertyReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(
                f,
                "property={} i={} j={} detail={}",
                self.property, v.i, v.j, v.detail
            )?;
        }
        Ok(())
    }
}

fn membership(n: usize, set: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &p in set {
        m[p] = true;
    }
    m
}

/// Local consistency: equal `(2 tau + 1)`-windows centred at interior
/// positions imply equal membership. Positions are grouped by window content
/// first, so only equal-window pairs are inspected.
pub fn check_property_a(text: &Text, set: &[usize], tau: usize) -> PropertyReport {
    let n = text.len();
    let member = membership(n, set);
    let mut violations = Vec::new();
    let mut checked = 0usize;
    if n >= 2 * tau {
        let mut centres: Vec<usize> = (tau..n - tau).collect();
        let window = 2 * tau + 1;
        let cmp_window = |&a: &usize, &b: &usize| {
            let (sa, sb) = (a - tau, b - tau);
            for d in 0..window {
                let (x, y) = (text.get(sa + d), text.get(sb + d));
                if x != y {
                    return x.cmp(&y);
                }
            }
            std::cmp::Ordering::Equal
        };
        centres.sort_by(cmp_window);
        let mut g = 0;
        while g < centres.len() {
            let mut h = g + 1;
            while h < centres.len()
                && cmp_window(&centres[g], &centres[h]) == std::cmp::Ordering::Equal
            {
                h += 1;
            }
            // memberships must be uniform within the group
            let first_member = member[centres[g]];
            for &c in &centres[g + 1..h] {
                checked += 1;
                if member[c] != first_member {
                    violations.push(Violation { i: centres[g], j: c, detail: 0 });
                }
            }
            g = h;
        }
    }
    PropertyReport { property: Property::A, violations, checked_pairs: checked }
}

/// Forward synchronization: equal right extensions of two set positions
/// partition identically up to `tau` short of the extension.
///
/// Checked over pairs adjacent in the lexicographic order of the set's
/// suffixes. This is equivalent to the all-pairs definition: the extension
/// of any pair is the minimum over the adjacent extensions between them, so
/// membership agreement below that length chains through the intermediate
/// suffixes, and conversely any violation survives in some adjacent pair.
/// [`check_property_b_all_pairs`] is the direct transliteration used to
/// validate this reduction on small instances.
pub fn check_property_b(text: &Text, set: &[usize], tau: usize) -> PropertyReport {
    let n = text.len();
    let member = membership(n, set);
    let mut sorted: Vec<usize> = set.to_vec();
    sorted.sort_by(|&a, &b| {
        let mut l = 0;
        loop {
            let (x, y) = (text.get(a + l), text.get(b + l));
            if x != y {
                return x.cmp(&y);
            }
            l += 1;
        }
    });
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for w in sorted.windows(2) {
        let (i, j) = (w[0], w[1]);
        let ell = naive_lce(text, i, j);
        if ell < tau {
            continue;
        }
        checked += 1;
        for d in 0..ell - tau {
            let mi = i + d < n && member[i + d];
            let mj = j + d < n && member[j + d];
            if mi != mj {
                violations.push(Violation { i, j, detail: d });
                break;
            }
        }
    }
    PropertyReport { property: Property::B, violations, checked_pairs: checked }
}

/// Direct all-pairs transliteration of forward synchronization; quadratic,
/// for small instances and for validating [`check_property_b`].
pub fn check_property_b_all_pairs(text: &Text, set: &[usize], tau: usize) -> PropertyReport {
    let n = text.len();
    let member = membership(n, set);
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for (ii, &i) in set.iter().enumerate() {
        for &j in &set[ii + 1..] {
            let ell = naive_lce(text, i, j);
            if ell < tau {
                continue;
            }
            checked += 1;
            for d in 0..ell - tau {
                let mi = i + d < n && member[i + d];
                let mj = j + d < n && member[j + d];
                if mi != mj {
                    violations.push(Violation { i, j, detail: d });
                    break;
                }
            }
        }
    }
    PropertyReport { property: Property::B, violations, checked_pairs: checked }
}

/// True iff the slice has some period at most `bound`, by direct trial.
pub fn has_period_at_most(symbols: &[i64], bound: usize) -> bool {
    'outer: for p in 1..=bound.min(symbols.len()) {
        for i in p..symbols.len() {
            if symbols[i] != symbols[i - p] {
                continue 'outer;
            }
        }
        return true;
    }
    false
}

/// Density: a gap longer than `tau` between consecutive set positions must
/// span a substring with period at most `tau / 4`.
pub fn check_property_c(text: &Text, set: &[usize], tau: usize) -> PropertyReport {
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for w in set.windows(2) {
        let (i, j) = (w[0], w[1]);
        if j - i <= tau {
            continue;
        }
        checked += 1;
        let slice: Vec<i64> = (i..=j).map(|x| text.get(x)).collect();
        if !has_period_at_most(&slice, tau / 4) {
            violations.push(Violation { i, j, detail: 0 });
        }
    }
    PropertyReport { property: Property::C, violations, checked_pairs: checked }
}

/// Converse of density: inside any substring with a period at most
/// `tau / 4`, the set avoids the interior at distance `margin` from both
/// ends. Checked over all maximal periodic runs for every period candidate.
pub fn check_c_converse(
    text: &Text,
    set: &[usize],
    tau: usize,
    margin: usize,
) -> PropertyReport {
    let n = text.len();
    let member = membership(n, set);
    let mut violations = Vec::new();
    let mut checked = 0usize;
    let max_p = tau / 4;
    for p in 1..=max_p.min(n.saturating_sub(1)) {
        // maximal runs where s[x] == s[x - p]
        let mut run_start = 0usize;
        let mut x = p;
        while x <= n {
            let extends = x < n && text.get(x) == text.get(x - p);
            if !extends {
                // run covers [run_start .. x)
                let (i, j) = (run_start, x - 1);
                if j >= i && j - i >= 2 * margin {
                    checked += 1;
                    for q in (i + margin)..=(j - margin) {
                        if member[q] {
                            violations.push(Violation { i, j, detail: q });
                            break;
                        }
                    }
                }
                run_start = x + 1 - p;
            }
            x += 1;
        }
    }
    PropertyReport { property: Property::CConverse, violations, checked_pairs: checked }
}

/// Run all four checks at the margins used for final partitioning sets.
pub fn check_partitioning(text: &Text, set: &[usize], tau: usize) -> Vec<PropertyReport> {
    vec![
        check_property_a(text, set, tau),
        check_property_b(text, set, tau),
        check_property_c(text, set, tau),
        check_c_converse(text, set, tau, tau),
    ]
}

/// Compacted trie over the given suffixes by naive pairwise comparison plus
/// naive adjacent extensions. Independent of the sparse-tree builder.
pub fn oracle_trie(text: &Text, positions: &[usize]) -> SparseTree {
    let n = text.len();
    let mut sorted: Vec<usize> = positions.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        assert!(w[0] != w[1], "duplicate suffix position {}", w[0]);
    }
    sorted.sort_by(|&a, &b| {
        let mut l = 0;
        loop {
            let (x, y) = (text.get(a + l), text.get(b + l));
            if x != y {
                return x.cmp(&y);
            }
            l += 1;
        }
    });
    let lcps: Vec<usize> = sorted.windows(2).map(|w| naive_lce(text, w[0], w[1])).collect();

    // recursive construction: split a group of suffixes sharing `depth`
    // symbols by the next symbol
    let mut nodes = vec![Node {
        parent: usize::MAX,
        edge_start: 0,
        edge_len: 0,
        depth: 0,
        children: Vec::new(),
        leaf_pos: None,
    }];
    // group is sorted[lo..hi]; all pairwise lcps >= depth
    fn build(
        nodes: &mut Vec<Node>,
        sorted: &[usize],
        lcps: &[usize],
        lo: usize,
        hi: usize,
        depth: usize,
        parent: usize,
        parent_depth: usize,
        n: usize,
    ) {
        if hi - lo == 1 {
            let pos = sorted[lo];
            let leaf_depth = n - pos + 1;
            let id = nodes.len();
            nodes.push(Node {
                parent,
                edge_start: pos + parent_depth,
                edge_len: leaf_depth - parent_depth,
                depth: leaf_depth,
                children: Vec::new(),
                leaf_pos: Some(pos),
            });
            let p = parent;
            nodes[p].children.push(id);
            return;
        }
        // common depth of the whole group
        let group_lcp = lcps[lo..hi - 1].iter().copied().min().unwrap();
        debug_assert!(group_lcp >= depth);
        if group_lcp > depth {
            // one internal node covering the shared extension
            let id = nodes.len();
            let rep = sorted[lo];
            nodes.push(Node {
                parent,
                edge_start: rep + parent_depth,
                edge_len: group_lcp - parent_depth,
                depth: group_lcp,
                children: Vec::new(),
                leaf_pos: None,
            });
            nodes[parent].children.push(id);
            split_children(nodes, sorted, lcps, lo, hi, group_lcp, id, n);
        } else {
            split_children(nodes, sorted, lcps, lo, hi, depth, parent, n);
        }
    }
    // split [lo..hi) into maximal subgroups whose adjacent lcps exceed depth
    fn split_children(
        nodes: &mut Vec<Node>,
        sorted: &[usize],
        lcps: &[usize],
        lo: usize,
        hi: usize,
        depth: usize,
        parent: usize,
        n: usize,
    ) {
        let mut g = lo;
        for k in lo..hi {
            let boundary = k == hi - 1 || lcps[k] == depth;
            if boundary {
                build(nodes, sorted, lcps, g, k + 1, depth, parent, depth, n);
                g = k + 1;
            }
        }
    }
    if !sorted.is_empty() {
        build(&mut nodes, &sorted, &lcps, 0, sorted.len(), 0, ROOT, 0, n);
    }
    SparseTree::from_parts(nodes, n)
}

/// Structural equality of two compacted tries over the same text: shape,
/// edge label contents, and leaf assignment.
pub fn trees_isomorphic(a: &SparseTree, b: &SparseTree, view: TextView) -> bool {
    fn labels_equal(
        view: TextView,
        (s1, l1): (usize, usize),
        (s2, l2): (usize, usize),
    ) -> bool {
        l1 == l2 && (0..l1).all(|d| view.get(s1 + d) == view.get(s2 + d))
    }
    fn rec(a: &SparseTree, b: &SparseTree, va: usize, vb: usize, view: TextView) -> bool {
        let (na, nb) = (&a.nodes[va], &b.nodes[vb]);
        if na.leaf_pos != nb.leaf_pos || na.children.len() != nb.children.len() {
            return false;
        }
        if !labels_equal(
            view,
            (na.edge_start, na.edge_len),
            (nb.edge_start, nb.edge_len),
        ) {
            return false;
        }
        na.children
            .iter()
            .zip(&nb.children)
            .all(|(&ca, &cb)| rec(a, b, ca, cb, view))
    }
    rec(a, b, ROOT, ROOT, view)
}

/// Non-streaming direct evaluation of the first sparsification stage: drop
/// every position that lies in `(i..j]` for a close pair `i, j` of set
/// positions with equal `(tau/2 + 1)`-windows.
pub fn direct_stage1(text: &Text, set: &[usize], tau: usize) -> Vec<usize> {
    let view = TextView::whole(text);
    let window = tau / 2 + 1;
    let mut removed = vec![false; set.len()];
    for (a, &i) in set.iter().enumerate() {
        for (b, &j) in set.iter().enumerate().skip(a + 1) {
            if j - i > tau / 4 {
                break;
            }
            if view.windows_equal(i, j, window) {
                for r in removed.iter_mut().take(b + 1).skip(a + 1) {
                    *r = true;
                }
            }
        }
    }
    set.iter()
        .zip(&removed)
        .filter(|&(_, &r)| !r)
        .map(|(&p, _)| p)
        .collect()
}

/// Per-phase arrays computed directly from the definitions: the equal-window
/// predicate, the four vbit reduction levels, and the emitted subset.
#[derive(Debug, Clone)]
pub struct PhaseTrace {
    pub input: Vec<usize>,
    pub r: Vec<bool>,
    pub v1: Vec<Option<u64>>,
    pub v: Vec<Option<u64>>,
    pub emitted: Vec<usize>,
}

/// Direct evaluation of one refinement phase over the full position array.
pub fn refine_phase_trace(text: &Text, prev: &[usize], k: u32) -> PhaseTrace {
    let view = TextView::whole(text);
    let m = prev.len();
    let half = 1usize << (k - 1);
    let win = (1usize << k) + 1;
    let w1 = text.w() as u64 + 1; // shifted symbol codes
    let gap_big = |h: usize| -> bool {
        if h + 1 >= m {
            true
        } else {
            prev[h + 1] - prev[h] > half
        }
    };
    let mut r = vec![false; m];
    let mut v1: Vec<Option<u64>> = vec![None; m];
    for h in 0..m {
        if gap_big(h) {
            continue;
        }
        let l = view.capped_lce(prev[h], prev[h + 1], win);
        if l == win {
            r[h] = true; // equal windows; v1 stays infinite
        } else {
            let (x, y) = (view.code(prev[h] + l), view.code(prev[h + 1] + l));
            let lb_sym = crate::bitops::lbit(x, y);
            let lb = w1 * l as u64 + lb_sym as u64;
            v1[h] = Some(2 * lb + ((x >> lb_sym) & 1));
        }
    }
    let fold = |a: &[Option<u64>]| -> Vec<Option<u64>> {
        (0..m)
            .map(|h| {
                let x = a[h]?;
                let y = (*a.get(h + 1)?)?;
                debug_assert_ne!(x, y);
                Some(crate::bitops::vbit(x, y))
            })
            .collect()
    };
    let v2 = fold(&v1);
    let v3 = fold(&v2);
    let v = fold(&v3);
    let at = |a: &[Option<u64>], h: isize| -> Option<u64> {
        if h < 0 {
            None
        } else {
            a.get(h as usize).copied().flatten()
        }
    };
    let mut emitted = Vec::new();
    for h in 0..m {
        let vh = at(&v, h as isize);
        let vprev = at(&v, h as isize - 1);
        let vnext = at(&v, h as isize + 1);
        let local_min = match (vprev, vh) {
            (Some(a), Some(b)) if a > b => match vnext {
                Some(c) => b < c,
                None => true, // infinity is larger
            },
            _ => false,
        };
        let gap_before_big = h == 0 || prev[h] - prev[h - 1] > half;
        let case_i = gap_big(h) || gap_before_big;
        let r_at = |h: isize| -> bool { h >= 0 && (h as usize) < m && r[h as usize] };
        let case_ii = !r_at(h as isize - 1)
            && r_at(h as isize)
            && r_at(h as isize + 1)
            && r_at(h as isize + 2);
        let case_iii = r_at(h as isize) && !r_at(h as isize + 1);
        if local_min || case_i || case_ii || case_iii {
            emitted.push(prev[h]);
        }
    }
    PhaseTrace { input: prev.to_vec(), r, v1, v, emitted }
}

/// Non-streaming direct evaluation of the whole refinement: apply
/// [`refine_phase_trace`] phase by phase starting from `[0..n)`.
pub fn direct_refine(text: &Text, params: &ParamEnv) -> Vec<usize> {
    direct_refine_all(text, params).pop().unwrap()
}

/// All intermediate sets `S_0 .. S_K`.
pub fn direct_refine_all(text: &Text, params: &ParamEnv) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = vec![(0..text.len()).collect()];
    for k in 1..=params.phase_count {
        let next = refine_phase_trace(text, sets.last().unwrap(), k).emitted;
        sets.push(next);
    }
    sets
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::text::Format;

    fn text(s: &[u8]) -> Text {
        Text::load(s, Format::Bytes).unwrap()
    }

    #[test]
    fn naive_lce_examples() {
        let t = text(b"abab");
        assert_eq!(naive_lce(&t, 0, 2), 2);
        assert_eq!(naive_lce(&t, 0, 0), 4);
        assert_eq!(naive_lce(&t, 1, 3), 1);
        assert_eq!(naive_lce(&t, 3, 3), 1);
    }

    #[test]
    fn naive_lce_symmetry() {
        let t = corpus::text_of(corpus::random(200, 3, 5));
        for p in 0..50 {
            for q in 0..50 {
                assert_eq!(naive_lce(&t, p, q), naive_lce(&t, q, p));
            }
        }
    }

    #[test]
    fn minimal_period_examples() {
        assert_eq!(brute_minimal_period(&[1, 1, 1, 1]), 1);
        let s: Vec<i64> = b"abaab".iter().map(|&c| c as i64).collect();
        assert_eq!(brute_minimal_period(&s), 3);
        let s: Vec<i64> = b"abcde".iter().map(|&c| c as i64).collect();
        assert_eq!(brute_minimal_period(&s), 5);
    }

    #[test]
    fn property_a_full_set_holds() {
        let t = corpus::text_of(corpus::random(128, 2, 1));
        let all: Vec<usize> = (0..128).collect();
        assert!(check_property_a(&t, &all, 8).holds());
    }

    #[test]
    fn property_a_even_positions_on_unary_violated() {
        let t = corpus::text_of(vec![5; 32]);
        let evens: Vec<usize> = (0..32).step_by(2).collect();
        let rep = check_property_a(&t, &evens, 4);
        assert!(!rep.holds());
    }

    #[test]
    fn property_b_vacuous_and_violation() {
        let t = text(b"abab");
        assert!(check_property_b(&t, &[0, 2], 4).holds()); // lce = 2 < tau

        let unary = corpus::text_of(vec![7; 16]);
        let rep = check_property_b(&unary, &[0, 4, 6], 4);
        assert!(!rep.holds());
        assert_eq!(rep.violations[0].detail, 2); // d = 2 mismatches memberships
        let rep = check_property_b_all_pairs(&unary, &[0, 4, 6], 4);
        assert!(!rep.holds());
        assert_eq!(rep.violations[0].detail, 2);
    }

    #[test]
    fn property_b_reduction_agrees_with_all_pairs() {
        let mut rng = corpus::SplitMix64::new(61);
        let mut disagreements = 0usize;
        for round in 0..200u64 {
            let n = 16 + rng.below(120) as usize;
            let sigma = 1 + rng.below(3) as u32;
            let t = corpus::text_of(corpus::random(n, sigma, round));
            // random subsets, arithmetic subsets, and prefixes
            let set: Vec<usize> = match round % 3 {
                0 => (0..n).filter(|_| rng.below(3) == 0).collect(),
                1 => (0..n).step_by(1 + rng.below(4) as usize).collect(),
                _ => (0..n / 2).collect(),
            };
            for tau in [2usize, 4, 8] {
                let fast = check_property_b(&t, &set, tau).holds();
                let slow = check_property_b_all_pairs(&t, &set, tau).holds();
                assert_eq!(fast, slow, "n={n} tau={tau} set={set:?}");
                if !fast {
                    disagreements += 1;
                }
            }
        }
        assert!(disagreements > 0, "the corpus never exercised a violation");
    }

    #[test]
    fn property_c_unary_energy() {
        let unary = corpus::text_of(vec![7; 64]);
        assert!(check_property_c(&unary, &[0, 63], 8).holds()); // period 1
        let t = corpus::text_of(corpus::random(64, 26, 3));
        // a long gap over a random-text stretch will not be periodic
        let rep = check_property_c(&t, &[0, 40], 8);
        assert!(!rep.holds() || rep.checked_pairs == 1);
    }

    #[test]
    fn c_converse_detects_interior_position() {
        let unary = corpus::text_of(vec![7; 64]);
        // position 30 sits in the interior of the unary run
        let rep = check_c_converse(&unary, &[0, 30, 63], 8, 8);
        assert!(!rep.holds());
        assert!(check_c_converse(&unary, &[0, 63], 8, 8).holds());
    }

    #[test]
    fn oracle_trie_banana_shape() {
        let t = text(b"banana");
        let all: Vec<usize> = (0..6).collect();
        let tree = oracle_trie(&t, &all);
        // leaves in lexicographic order: a$, ana$, anana$, banana$, na$, nana$
        assert_eq!(tree.leaves_in_order(), vec![5, 3, 1, 0, 4, 2]);
        // classical shape: root has children a, banana$, na
        assert_eq!(tree.nodes[ROOT].children.len(), 3);
    }

    #[test]
    fn oracle_trie_single() {
        let t = text(b"xy");
        let tree = oracle_trie(&t, &[1]);
        assert_eq!(tree.num_leaves(), 1);
        assert_eq!(tree.nodes.len(), 2);
    }

    #[test]
    fn builder_matches_oracle_trie() {
        let mut rng = corpus::SplitMix64::new(99);
        for round in 0..30 {
            let n = 24 + rng.below(300) as usize;
            let sigma = 1 + rng.below(4) as u32;
            let t = corpus::text_of(corpus::random(n, sigma, round * 17));
            let step = 1 + rng.below(5) as usize;
            let positions: Vec<usize> = (0..n).step_by(step).collect();
            let view = TextView::whole(&t);
            let built = crate::sst::build_sparse_tree(view, &positions, 4).unwrap();
            let oracle = oracle_trie(&t, &positions);
            assert!(trees_isomorphic(&built, &oracle, view), "round {round}");
        }
    }

    #[test]
    fn direct_stage1_trivial_cases() {
        let t = corpus::text_of(corpus::random(64, 26, 2)); // distinct windows
        let set: Vec<usize> = (0..64).collect();
        assert_eq!(direct_stage1(&t, &set, 16), set);
        assert_eq!(direct_stage1(&t, &[], 16), Vec::<usize>::new());
    }

    #[test]
    fn direct_stage1_unary() {
        // unary text: every set position with a predecessor within tau/4 is
        // removed
        let t = corpus::text_of(vec![3; 64]);
        let set: Vec<usize> = (0..48).collect();
        let out = direct_stage1(&t, &set, 16);
        assert_eq!(out, vec![0]);
    }
}
