//! Sparsification of the refined set: a first stage removes positions with
//! close equal-window twins, a second stage synthesizes one short letter per
//! surviving position via iterated vbit reductions over neighbor tuples, and
//! a recompression loop deletes letters at cut-crossing adjacent pairs until
//! the sequence is short. Replaying the deterministic producer with the
//! surviving-letter mask yields the final explicit position set.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bitops::{self, encode_tuple, Chunk};
use crate::providers::{CappedLce, WindowTreeLce};
use crate::refine::{run_pipeline, ProviderKind};
use crate::text::{ParamEnv, Text};

#[derive(Debug, Error)]
pub enum SparsifyError {
    #[error("neighbor count {m} at position {p} exceeds the tuple arity {ell}")]
    TooManyNeighbors { p: usize, m: usize, ell: usize },
    #[error("recompression for j = {j} did not converge within 3 iterations")]
    TooManyIterations { j: u32 },
    #[error("replay produced {got} positions but the keep mask has {expected}")]
    ReplayMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Bitops(#[from] bitops::BitopsError),
}

/// Sliding window trees over `C'_i = s[i tau .. (i+3) tau)` indexed by a
/// superset position set; heads must arrive in ascending order.
struct SlidingTrees<'a> {
    text: &'a Text,
    set: &'a [usize],
    tau: usize,
    builder_tau: usize,
    cur: Option<(usize, WindowTreeLce<'a>)>,
    builds: usize,
    queries_done: u64,
}

impl<'a> SlidingTrees<'a> {
    fn new(text: &'a Text, set: &'a [usize], tau: usize, builder_tau: usize) -> Self {
        SlidingTrees { text, set, tau, builder_tau, cur: None, builds: 0, queries_done: 0 }
    }

    /// Tree whose window serves a head at position `h`.
    fn for_head(&mut self, h: usize) -> &mut WindowTreeLce<'a> {
        let i = if 2 * h < self.tau { 0 } else { (2 * h - self.tau) / (2 * self.tau) };
        if self.cur.as_ref().map(|(ci, _)| *ci) != Some(i) {
            debug_assert!(self.cur.as_ref().is_none_or(|(ci, _)| *ci < i));
            self.queries_done += self.cur.as_ref().map_or(0, |(_, t)| t.queries());
            let lo = i * self.tau;
            let span_end = (i + 3) * self.tau;
            let from = self.set.partition_point(|&p| p < lo);
            let to = self.set.partition_point(|&p| p < span_end);
            self.cur = Some((
                i,
                WindowTreeLce::new(self.text, lo, span_end, &self.set[from..to], self.builder_tau),
            ));
            self.builds += 1;
        }
        &mut self.cur.as_mut().unwrap().1
    }
}

fn builder_tau(params: &ParamEnv) -> usize {
    1usize << (params.phase_count + 3)
}

/// Window-tree work done by one pass.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassStats {
    pub tree_builds: usize,
    pub lce_queries: u64,
}

/// First stage: drop every set position lying in `(i..j]` for a pair
/// `i < j <= i + tau/4` of set positions with equal `(tau/2 + 1)`-windows.
/// Left-to-right with a bounded look-ahead; marking walks right to left and
/// stops at the first already-marked position, so each position is marked at
/// most once.
pub fn stage1(text: &Text, params: &ParamEnv, set: &[usize]) -> Vec<usize> {
    stage1_counted(text, params, set).0
}

/// [`stage1`] plus its window-tree instrumentation.
pub fn stage1_counted(
    text: &Text,
    params: &ParamEnv,
    set: &[usize],
) -> (Vec<usize>, PassStats) {
    let tau = params.tau;
    let quarter = tau / 4;
    let cap = tau / 2 + 1;
    let lookahead_bound = 64 * ((quarter >> params.phase_count) + 1);
    let mut trees = SlidingTrees::new(text, set, tau, builder_tau(params));
    let mut marked = vec![false; set.len()];
    let mut out = Vec::new();
    let mut ahead = 0usize;
    for hp in 0..set.len() {
        let h = set[hp];
        if ahead < hp + 1 {
            ahead = hp + 1;
        }
        while ahead < set.len() && set[ahead] <= h + quarter {
            ahead += 1;
        }
        debug_assert!(
            ahead - hp - 1 <= lookahead_bound,
            "look-ahead queue of {} exceeds the sparsity bound {lookahead_bound}",
            ahead - hp - 1
        );
        let tree = trees.for_head(h);
        for jp in hp + 1..ahead {
            if tree.capped_lce(0, h, set[jp], cap) == cap {
                for t in (hp + 1..=jp).rev() {
                    if marked[t] {
                        break;
                    }
                    marked[t] = true;
                }
            }
        }
        if !marked[hp] {
            out.push(h);
        }
    }
    let stats = PassStats {
        tree_builds: trees.builds,
        lce_queries: trees.cur.as_ref().map_or(0, |(_, t)| t.queries()) + trees.queries_done,
    };
    (out, stats)
}

/// Field widths of the four tuple levels, derived from the numeric value
/// bound of each vbit reduction (all-ones is reserved for infinity at every
/// level).
#[derive(Debug, Clone, Copy)]
pub struct LetterScheme {
    /// Tuple arity: `2^6 * lambda3`.
    pub ell: usize,
    pub widths: [u32; 4],
}

impl LetterScheme {
    pub fn new(params: &ParamEnv) -> Self {
        let ell = 64 * params.lambda3 as usize;
        let sym_w = params.w as u64 + 1; // shifted symbol codes
        let max1 = 2 * sym_w * (params.tau as u64 / 2 + 1) - 1;
        let fw1 = bitops::width_for_max(max1);
        let max2 = 2 * (ell as u64 * fw1 as u64) - 1;
        let fw2 = bitops::width_for_max(max2);
        let max3 = 2 * (ell as u64 * fw2 as u64) - 1;
        let fw3 = bitops::width_for_max(max3);
        let max4 = 2 * (ell as u64 * fw3 as u64) - 1;
        let fw4 = bitops::width_for_max(max4);
        LetterScheme { ell, widths: [fw1, fw2, fw3, fw4] }
    }

    /// Width in bits of one finished letter.
    pub fn letter_bits(&self) -> usize {
        self.ell * self.widths[3] as usize
    }
}

/// The letter sequence with its distance bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RSequence {
    /// Letter ids into `alphabet`, one per surviving position, in order.
    pub letters: Vec<u32>,
    /// Distinct letters in ascending chunk-value order.
    pub alphabet: Vec<Chunk>,
    /// `m[i][j]` counts surviving positions in `(p_i .. p_i + tau/2^j]`.
    pub m: Vec<Vec<u32>>,
    /// Source position per letter.
    pub origins: Vec<usize>,
    /// Index of each letter in the original sequence.
    pub orig_index: Vec<u32>,
    pub original_len: usize,
    pub m_max: usize,
    pub tau: usize,
    pub n: usize,
}

impl RSequence {
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letter_chunk(&self, i: usize) -> &Chunk {
        &self.alphabet[self.letters[i] as usize]
    }

    /// Recount every `m[i][j]` from the stored origins.
    pub fn recount_m(&self) -> Vec<Vec<u32>> {
        count_m(&self.origins, self.tau, self.m_max)
    }
}

fn count_m(positions: &[usize], tau: usize, m_max: usize) -> Vec<Vec<u32>> {
    let mut m = vec![vec![0u32; m_max + 1]; positions.len()];
    for j in 0..=m_max {
        let dist = tau >> j;
        let mut hi = 0usize;
        for i in 0..positions.len() {
            if hi < i + 1 {
                hi = i + 1;
            }
            while hi < positions.len() && positions[hi] <= positions[i] + dist {
                hi += 1;
            }
            m[i][j] = (hi - i - 1) as u32;
        }
    }
    m
}

/// Second stage: one letter per surviving position. Level 1 compares the
/// `(tau/2 + 1)`-windows of a position against those of its neighbors within
/// `tau/2^5`; levels 2 to 4 repeat the vbit reduction on the packed chunks,
/// each neighbor contributing the chunk computed at its own position.
pub fn build_r(
    text: &Text,
    params: &ParamEnv,
    set: &[usize],
    s_prime: &[usize],
) -> Result<RSequence, SparsifyError> {
    Ok(build_r_counted(text, params, set, s_prime)?.0)
}

/// [`build_r`] plus its window-tree instrumentation.
pub fn build_r_counted(
    text: &Text,
    params: &ParamEnv,
    set: &[usize],
    s_prime: &[usize],
) -> Result<(RSequence, PassStats), SparsifyError> {
    let scheme = LetterScheme::new(params);
    let tau = params.tau;
    let reach = tau >> 5;
    let cap = tau / 2 + 1;
    let sym_w = params.w as u64 + 1;
    let len = s_prime.len();

    // neighbor ranges (two-pointer)
    let mut nb_end = vec![0usize; len];
    let mut hi = 0usize;
    for i in 0..len {
        if hi < i + 1 {
            hi = i + 1;
        }
        while hi < len && s_prime[hi] <= s_prime[i] + reach {
            hi += 1;
        }
        if hi - i - 1 > scheme.ell {
            return Err(SparsifyError::TooManyNeighbors {
                p: s_prime[i],
                m: hi - i - 1,
                ell: scheme.ell,
            });
        }
        nb_end[i] = hi;
    }

    // level 1 from window LCE queries
    let mut trees = SlidingTrees::new(text, set, tau, builder_tau(params));
    let mut level: Vec<Chunk> = Vec::with_capacity(len);
    for i in 0..len {
        let p = s_prime[i];
        let tree = trees.for_head(p);
        let mut values: Vec<Option<u64>> = Vec::with_capacity(scheme.ell);
        for jp in i + 1..nb_end[i] {
            let q = s_prime[jp];
            let l = tree.capped_lce(0, p, q, cap);
            assert!(l < cap, "surviving positions {p} and {q} have equal windows");
            let (x, y) = (tree.code(p + l), tree.code(q + l));
            let lb_sym = bitops::lbit(x, y);
            let lb = sym_w * l as u64 + lb_sym as u64;
            values.push(Some(2 * lb + ((x >> lb_sym) & 1)));
        }
        values.resize(scheme.ell, None);
        level.push(encode_tuple(&values, scheme.widths[0])?);
    }

    // levels 2..4: vbit of packed chunks, neighbors contribute their own
    for depth in 1..4 {
        let mut next: Vec<Chunk> = Vec::with_capacity(len);
        for i in 0..len {
            let mut values: Vec<Option<u64>> = Vec::with_capacity(scheme.ell);
            for jp in i + 1..nb_end[i] {
                values.push(Some(Chunk::vbit(&level[i], &level[jp])));
            }
            values.resize(scheme.ell, None);
            next.push(encode_tuple(&values, scheme.widths[depth])?);
        }
        level = next;
    }

    // intern letters in ascending chunk-value order
    let mut alphabet: Vec<Chunk> = level.clone();
    alphabet.sort_unstable();
    alphabet.dedup();
    let letters: Vec<u32> = level
        .iter()
        .map(|c| alphabet.binary_search(c).expect("letter interned") as u32)
        .collect();

    let m_max = params.m_max_index();
    let stats = PassStats {
        tree_builds: trees.builds,
        lce_queries: trees.cur.as_ref().map_or(0, |(_, t)| t.queries()) + trees.queries_done,
    };
    Ok((
        RSequence {
            letters,
            alphabet,
            m: count_m(s_prime, tau, m_max),
            origins: s_prime.to_vec(),
            orig_index: (0..len as u32).collect(),
            original_len: len,
            m_max,
            tau,
            n: params.n,
        },
        stats,
    ))
}

/// A bipartition of the letter alphabet chosen greedily so that the directed
/// pair weight from the acute side to the grave side is at least a quarter
/// of the total.
#[derive(Debug, Clone)]
pub struct CutPartition {
    /// `acute[id]` is true when the letter sits on the acute side.
    pub acute: Vec<bool>,
    pub forward_weight: u64,
    pub total_weight: u64,
}

/// Letters are processed in ascending order; each joins the side that adds
/// more weight to the undirected cut, and the sides are swapped at the end
/// if the other direction carries more weight.
pub fn greedy_cut(pair_weights: &BTreeMap<(u32, u32), u64>, alphabet_len: usize) -> CutPartition {
    let mut incident: Vec<Vec<(usize, u64)>> = vec![Vec::new(); alphabet_len];
    for (&(a, b), &w) in pair_weights {
        debug_assert_ne!(a, b, "diagonal pair weights are never counted");
        incident[a as usize].push((b as usize, w));
        incident[b as usize].push((a as usize, w));
    }
    let mut acute = vec![false; alphabet_len];
    for a in 0..alphabet_len {
        let (mut c0, mut c1) = (0u64, 0u64);
        for &(other, w) in &incident[a] {
            if other < a {
                if acute[other] {
                    c1 += w;
                } else {
                    c0 += w;
                }
            }
        }
        acute[a] = c0 >= c1;
    }
    let (mut fwd, mut bwd, mut total) = (0u64, 0u64, 0u64);
    for (&(a, b), &w) in pair_weights {
        total += w;
        match (acute[a as usize], acute[b as usize]) {
            (true, false) => fwd += w,
            (false, true) => bwd += w,
            _ => {}
        }
    }
    if fwd < bwd {
        for side in acute.iter_mut() {
            *side = !*side;
        }
        std::mem::swap(&mut fwd, &mut bwd);
    }
    debug_assert!(4 * fwd >= total, "directed cut below a quarter of the total");
    CutPartition { acute, forward_weight: fwd, total_weight: total }
}

#[derive(Debug, Clone, Copy)]
pub struct StepStats {
    pub eligible_before: u64,
    pub eligible_after: u64,
    pub removed: usize,
}

fn eligible_count(r: &RSequence, j: usize) -> u64 {
    (1..r.len().saturating_sub(1))
        .filter(|&i| r.m[i][j] != 0 && r.m[i - 1][5] != 0)
        .count() as u64
}

fn keep_unmarked<T>(v: &mut Vec<T>, mark: &[bool]) {
    let mut idx = 0usize;
    v.retain(|_| {
        let k = !mark[idx];
        idx += 1;
        k
    });
}

/// One recompression round for distance exponent `j`: collect pair
/// statistics over removable indices, cut the alphabet, delete letters whose
/// pair crosses the cut forward, and refresh the distance counters. A letter
/// is removable only when both its successor (within `tau/2^j`) and its
/// predecessor (within `tau/2^5`) are close, so gaps never widen past the
/// density guarantee.
pub fn recompress_step(r: &mut RSequence, j: u32, check_m: bool) -> StepStats {
    let j = j as usize;
    assert!(j <= r.m_max && j >= 5, "distance exponent out of range");
    let len = r.len();
    let mut pair_weights: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for i in 1..len.saturating_sub(1) {
        if r.m[i][j] != 0 && r.m[i - 1][5] != 0 {
            // close surviving positions carry distinct letters
            debug_assert_ne!(r.letters[i], r.letters[i + 1]);
            *pair_weights.entry((r.letters[i], r.letters[i + 1])).or_insert(0) += 1;
        }
    }
    let eligible_before: u64 = pair_weights.values().sum();
    let cut = greedy_cut(&pair_weights, r.alphabet.len());
    let mut mark = vec![false; len];
    for i in 1..len.saturating_sub(1) {
        if r.m[i][j] != 0
            && r.m[i - 1][5] != 0
            && cut.acute[r.letters[i] as usize]
            && !cut.acute[r.letters[i + 1] as usize]
        {
            mark[i] = true;
        }
    }
    // survivors-only counts via prefix sums over the removal marks
    let mut pref = vec![0u32; len + 1];
    for i in 0..len {
        pref[i + 1] = pref[i] + mark[i] as u32;
    }
    for i in 0..len {
        for jx in 0..=r.m_max {
            let cnt = r.m[i][jx] as usize;
            r.m[i][jx] -= pref[i + cnt + 1] - pref[i + 1];
        }
    }
    let removed = pref[len] as usize;
    keep_unmarked(&mut r.letters, &mark);
    keep_unmarked(&mut r.m, &mark);
    keep_unmarked(&mut r.origins, &mark);
    keep_unmarked(&mut r.orig_index, &mark);
    if check_m {
        assert_eq!(r.m, r.recount_m(), "incremental distance counters diverged");
    }
    let eligible_after = eligible_count(r, j);
    assert!(
        4 * eligible_after <= 3 * eligible_before,
        "recompression step did not remove a quarter of eligible pairs"
    );
    StepStats { eligible_before, eligible_after, removed }
}

#[derive(Debug, Clone, Default)]
pub struct LoopStats {
    /// `(j, iterations)` in visiting order.
    pub per_j: Vec<(u32, u32)>,
    pub steps: Vec<StepStats>,
}

/// Visit the distance exponents in decreasing order; for each, shrink the
/// sequence until it fits `2^(j+10) * n / tau`, which takes at most three
/// rounds. Returns the keep mask over the original letter sequence.
pub fn recompress_loop(
    r: &mut RSequence,
    params: &ParamEnv,
) -> Result<(Vec<bool>, LoopStats), SparsifyError> {
    let mut stats = LoopStats::default();
    let check_m = params.mode == crate::text::Mode::Desk;
    for j in params.recompression_range() {
        let limit = (1u128 << (j + 10)) * params.n as u128;
        let mut iters = 0u32;
        while (r.len() as u128) * (params.tau as u128) > limit {
            if iters >= 3 {
                return Err(SparsifyError::TooManyIterations { j });
            }
            stats.steps.push(recompress_step(r, j, check_m));
            iters += 1;
        }
        stats.per_j.push((j, iters));
    }
    let mut keep = vec![false; r.original_len];
    for &oi in &r.orig_index {
        keep[oi as usize] = true;
    }
    Ok((keep, stats))
}

/// Deterministic rerun of the refinement plus the first stage; the i-th
/// produced position is kept iff `keep[i]`.
pub fn replay_to_sstar(
    text: &Text,
    params: &ParamEnv,
    kind: ProviderKind,
    keep: &[bool],
) -> Result<Vec<usize>, SparsifyError> {
    let set = run_pipeline(text, params, kind);
    let s_prime = stage1(text, params, &set);
    if s_prime.len() != keep.len() {
        return Err(SparsifyError::ReplayMismatch { expected: keep.len(), got: s_prime.len() });
    }
    Ok(s_prime.into_iter().zip(keep).filter(|&(_, &k)| k).map(|(p, _)| p).collect())
}
