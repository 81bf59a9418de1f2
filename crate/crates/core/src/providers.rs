//! Capped longest-common-extension backends for the refinement phases.
//!
//! Every backend answers `min(cap, lce(a, b))` for the exact query set the
//! phases issue; the windowed ones additionally assert that queries stay
//! inside their advertised span. A logging wrapper supports replaying the
//! issued queries against the naive scan.

use crate::sst::{build_sparse_tree, SparseTree};
use crate::suffix::{lcp_array, suffix_array, RangeMin};
use crate::text::{ParamEnv, Text, TextView};

pub trait CappedLce {
    /// `min(cap, lce(a, b))`; `k` identifies the issuing phase.
    fn capped_lce(&mut self, k: u32, a: usize, b: usize, cap: usize) -> usize;

    /// Shifted symbol code at an absolute text position (sentinel maps
    /// to 0).
    fn code(&self, i: usize) -> u64;

    fn query_count(&self) -> u64 {
        0
    }
}

/// Direct symbol scans; also serves as the reference all other providers
/// are replayed against.
pub struct NaiveLce<'a> {
    view: TextView<'a>,
    queries: u64,
}

impl<'a> NaiveLce<'a> {
    pub fn new(text: &'a Text) -> Self {
        NaiveLce { view: TextView::whole(text), queries: 0 }
    }
}

impl CappedLce for NaiveLce<'_> {
    fn capped_lce(&mut self, _k: u32, a: usize, b: usize, cap: usize) -> usize {
        self.queries += 1;
        self.view.capped_lce(a, b, cap)
    }

    fn code(&self, i: usize) -> u64 {
        self.view.code(i)
    }

    fn query_count(&self) -> u64 {
        self.queries
    }
}

/// Suffix array + LCP + range minimum over the whole text; constant-time
/// capped queries.
pub struct WholeTextLce<'a> {
    text: &'a Text,
    rank: Vec<usize>,
    rmq: RangeMin,
    queries: u64,
}

impl<'a> WholeTextLce<'a> {
    pub fn new(text: &'a Text) -> Self {
        let sa = suffix_array(text.symbols());
        let lcp = lcp_array(text.symbols(), &sa);
        let mut rank = vec![0usize; text.len()];
        for (r, &i) in sa.iter().enumerate() {
            rank[i] = r;
        }
        let lcp_u32: Vec<u32> = lcp.iter().map(|&x| x as u32).collect();
        WholeTextLce { text, rank, rmq: RangeMin::new(lcp_u32), queries: 0 }
    }

    fn lce(&self, a: usize, b: usize) -> usize {
        if a == b {
            return self.text.len() - a;
        }
        let (ra, rb) = (self.rank[a], self.rank[b]);
        let (l, r) = if ra < rb { (ra + 1, rb) } else { (rb + 1, ra) };
        self.rmq.min(l, r) as usize
    }
}

impl CappedLce for WholeTextLce<'_> {
    fn capped_lce(&mut self, _k: u32, a: usize, b: usize, cap: usize) -> usize {
        self.queries += 1;
        cap.min(self.lce(a, b))
    }

    fn code(&self, i: usize) -> u64 {
        self.text.code(i)
    }

    fn query_count(&self) -> u64 {
        self.queries
    }
}

/// Suffix-array LCE structure over one sliding window of three consecutive
/// blocks; rebuilt in place as the source scan passes block boundaries.
pub struct WindowedLce<'a> {
    text: &'a Text,
    pub block: usize,
    lo: usize,
    hi: usize,
    rank: Vec<usize>,
    rmq: RangeMin,
    queries: u64,
    pub rebuild_symbols: usize,
    pub rebuilds: usize,
}

impl<'a> WindowedLce<'a> {
    /// `block` must be at least `6 * 2^K` for the deepest phase `K`.
    pub fn new(text: &'a Text, block: usize) -> Self {
        let mut w = WindowedLce {
            text,
            block,
            lo: 0,
            hi: 0,
            rank: Vec::new(),
            rmq: RangeMin::new(vec![0]),
            queries: 0,
            rebuild_symbols: 0,
            rebuilds: 0,
        };
        w.rebuild(0);
        w
    }

    fn rebuild(&mut self, window_idx: usize) {
        self.lo = window_idx * self.block;
        self.hi = ((window_idx + 3) * self.block).min(self.text.len());
        let slice = &self.text.symbols()[self.lo..self.hi];
        let sa = suffix_array(slice);
        let lcp = lcp_array(slice, &sa);
        self.rank = vec![0usize; slice.len()];
        for (r, &i) in sa.iter().enumerate() {
            self.rank[i] = r;
        }
        self.rmq = RangeMin::new(lcp.iter().map(|&x| x as u32).collect());
        self.rebuild_symbols += slice.len();
        self.rebuilds += 1;
    }

    /// Called before the source feeds position `p`.
    pub fn on_source_pos(&mut self, p: usize) {
        if p >= self.block && p.is_multiple_of(self.block) {
            self.rebuild(p / self.block - 1);
        }
    }
}

impl CappedLce for WindowedLce<'_> {
    fn capped_lce(&mut self, _k: u32, a: usize, b: usize, cap: usize) -> usize {
        self.queries += 1;
        assert!(
            a >= self.lo && b >= self.lo && a.max(b) + cap <= self.lo + 3 * self.block,
            "query ({a},{b},{cap}) outside window [{}..{})",
            self.lo,
            self.lo + 3 * self.block
        );
        if a == b {
            return cap;
        }
        let (ra, rb) = (self.rank[a - self.lo], self.rank[b - self.lo]);
        let (l, r) = if ra < rb { (ra + 1, rb) } else { (rb + 1, ra) };
        cap.min(self.rmq.min(l, r) as usize)
    }

    fn code(&self, i: usize) -> u64 {
        self.text.code(i)
    }

    fn query_count(&self) -> u64 {
        self.queries
    }
}

/// Sparse tree with LCA over the positions of one window; serves the phases
/// of one level in the grouped scheme.
pub struct WindowTreeLce<'a> {
    tree: SparseTree,
    text: &'a Text,
    lo: usize,
    /// Untruncated window end; every query must satisfy
    /// `max(a, b) + cap <= span_end`.
    span_end: usize,
    queries: u64,
}

impl<'a> WindowTreeLce<'a> {
    pub fn new(
        text: &'a Text,
        lo: usize,
        span_end: usize,
        positions: &[usize],
        builder_tau: usize,
    ) -> Self {
        let view = TextView::new(text, span_end);
        let in_window: Vec<usize> = positions.iter().copied().filter(|&p| p >= lo).collect();
        let tree = build_sparse_tree(view, &in_window, builder_tau)
            .expect("window positions are sorted and in range");
        WindowTreeLce { tree, text, lo, span_end, queries: 0 }
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }
}

impl CappedLce for WindowTreeLce<'_> {
    fn capped_lce(&mut self, _k: u32, a: usize, b: usize, cap: usize) -> usize {
        self.queries += 1;
        assert!(
            a >= self.lo && b >= self.lo && a.max(b) + cap <= self.span_end,
            "query ({a},{b},{cap}) outside window [{}..{})",
            self.lo,
            self.span_end
        );
        let lce = self
            .tree
            .lca_lce(a, b)
            .expect("queried positions are indexed in the window tree");
        cap.min(lce)
    }

    fn code(&self, i: usize) -> u64 {
        debug_assert!(i >= self.lo && i < self.span_end);
        self.text.code(i)
    }

    fn query_count(&self) -> u64 {
        self.queries
    }
}

/// Provider used by the flat (non-leveled) pipeline drivers.
pub enum FlatProvider<'a> {
    Naive(NaiveLce<'a>),
    Whole(WholeTextLce<'a>),
    Windowed(WindowedLce<'a>),
}

impl<'a> FlatProvider<'a> {
    pub fn new(text: &'a Text, params: &ParamEnv, kind: crate::refine::ProviderKind) -> Self {
        use crate::refine::ProviderKind::*;
        match kind {
            Naive => FlatProvider::Naive(NaiveLce::new(text)),
            WholeText => FlatProvider::Whole(WholeTextLce::new(text)),
            Windowed => {
                let sqrt_n = (params.n as f64).sqrt().floor() as usize;
                let min_block = 6usize << params.phase_count;
                FlatProvider::Windowed(WindowedLce::new(text, sqrt_n.max(min_block).max(1)))
            }
            Leveled => unreachable!("the leveled scheme has its own driver"),
        }
    }

    pub fn on_source_pos(&mut self, p: usize) {
        if let FlatProvider::Windowed(w) = self {
            w.on_source_pos(p);
        }
    }
}

impl CappedLce for FlatProvider<'_> {
    fn capped_lce(&mut self, k: u32, a: usize, b: usize, cap: usize) -> usize {
        match self {
            FlatProvider::Naive(p) => p.capped_lce(k, a, b, cap),
            FlatProvider::Whole(p) => p.capped_lce(k, a, b, cap),
            FlatProvider::Windowed(p) => p.capped_lce(k, a, b, cap),
        }
    }

    fn code(&self, i: usize) -> u64 {
        match self {
            FlatProvider::Naive(p) => p.code(i),
            FlatProvider::Whole(p) => p.code(i),
            FlatProvider::Windowed(p) => p.code(i),
        }
    }

    fn query_count(&self) -> u64 {
        match self {
            FlatProvider::Naive(p) => p.query_count(),
            FlatProvider::Whole(p) => p.query_count(),
            FlatProvider::Windowed(p) => p.query_count(),
        }
    }
}

/// Record of one issued query and its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryRecord {
    pub k: u32,
    pub a: usize,
    pub b: usize,
    pub cap: usize,
    pub answer: usize,
}

/// Wrapper that logs every query for later replay against the naive scan.
pub struct Logged<P> {
    pub inner: P,
    pub log: Vec<QueryRecord>,
}

impl<P> Logged<P> {
    pub fn new(inner: P) -> Self {
        Logged { inner, log: Vec::new() }
    }
}

impl<P: CappedLce> CappedLce for Logged<P> {
    fn capped_lce(&mut self, k: u32, a: usize, b: usize, cap: usize) -> usize {
        let answer = self.inner.capped_lce(k, a, b, cap);
        self.log.push(QueryRecord { k, a, b, cap, answer });
        answer
    }

    fn code(&self, i: usize) -> u64 {
        self.inner.code(i)
    }

    fn query_count(&self) -> u64 {
        self.inner.query_count()
    }
}
