//! End-to-end construction of the final partitioning set: refinement,
//! first-stage sparsification, letter synthesis, recompression, and the
//! surviving-position extraction, with a stats record of sizes and timings.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::refine::{run_pipeline_counted, ProviderKind};
use crate::sparsify::{
    build_r_counted, recompress_loop, replay_to_sstar, stage1_counted, SparsifyError,
};
use crate::text::{Mode, ParamEnv, Text};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Sparsify(#[from] SparsifyError),
}

/// Sizes, counters, and wall times of one full build. Serialized with a
/// stable field order; the wall-time fields are the only nondeterministic
/// ones.
#[derive(Debug, Clone, Serialize)]
pub struct StatsRecord {
    pub n: usize,
    pub tau: usize,
    pub b: usize,
    pub mode: String,
    pub lambda3: u64,
    pub lambda4: u64,
    pub phase_count: u32,
    pub refined_size: usize,
    pub stage1_size: usize,
    pub r_initial: usize,
    pub r_final: usize,
    pub sstar_size: usize,
    pub letter_alphabet: usize,
    pub letter_bits: usize,
    /// `(j, iterations)` per visited distance exponent, in visiting order.
    pub recompression_iterations: Vec<(u32, u32)>,
    pub recompression_removed: usize,
    pub refine_lce_queries: u64,
    pub stage1_lce_queries: u64,
    pub stage1_tree_builds: usize,
    pub letter_lce_queries: u64,
    pub letter_tree_builds: usize,
    pub wall_ms_refine: u128,
    pub wall_ms_stage1: u128,
    pub wall_ms_letters: u128,
    pub wall_ms_recompression: u128,
    pub wall_ms_extract: u128,
}

impl StatsRecord {
    /// Copy with zeroed wall times, for byte-identical comparisons.
    pub fn without_wall_times(&self) -> StatsRecord {
        StatsRecord {
            wall_ms_refine: 0,
            wall_ms_stage1: 0,
            wall_ms_letters: 0,
            wall_ms_recompression: 0,
            wall_ms_extract: 0,
            ..self.clone()
        }
    }
}

pub struct BuildOutput {
    pub sstar: Vec<usize>,
    pub stats: StatsRecord,
}

/// Default provider for a mode: the whole-text structure at desk scale, the
/// space-conscious windowed or leveled scheme otherwise.
pub fn default_provider(params: &ParamEnv) -> ProviderKind {
    match params.mode {
        Mode::Desk => ProviderKind::WholeText,
        Mode::Reference => {
            let sqrt_n = (params.n as f64).sqrt().floor() as usize;
            if params.tau < sqrt_n {
                ProviderKind::Windowed
            } else {
                ProviderKind::Leveled
            }
        }
    }
}

pub fn build_partition(text: &Text, params: &ParamEnv) -> Result<BuildOutput, PipelineError> {
    build_partition_with(text, params, default_provider(params))
}

pub fn build_partition_with(
    text: &Text,
    params: &ParamEnv,
    kind: ProviderKind,
) -> Result<BuildOutput, PipelineError> {
    let t0 = Instant::now();
    let (refined, refine_queries) = run_pipeline_counted(text, params, kind);
    let t1 = Instant::now();
    let (s_prime, stage1_stats) = stage1_counted(text, params, &refined);
    let t2 = Instant::now();
    let (mut r, letter_stats) = build_r_counted(text, params, &refined, &s_prime)?;
    let r_initial = r.len();
    let letter_alphabet = r.alphabet.len();
    let letter_bits = crate::sparsify::LetterScheme::new(params).letter_bits();
    let t3 = Instant::now();
    let (keep, loop_stats) = recompress_loop(&mut r, params)?;
    let r_final = r.len();
    let t4 = Instant::now();
    // desk mode keeps the produced positions; reference mode re-runs the
    // deterministic producer and filters by the keep mask
    let sstar = match params.mode {
        Mode::Desk => s_prime
            .iter()
            .copied()
            .zip(&keep)
            .filter(|&(_, &k)| k)
            .map(|(p, _)| p)
            .collect(),
        Mode::Reference => replay_to_sstar(text, params, kind, &keep)?,
    };
    let t5 = Instant::now();
    let stats = StatsRecord {
        n: params.n,
        tau: params.tau,
        b: params.b,
        mode: params.mode.as_str().to_string(),
        lambda3: params.lambda3,
        lambda4: params.lambda4,
        phase_count: params.phase_count,
        refined_size: refined.len(),
        stage1_size: s_prime.len(),
        r_initial,
        r_final,
        sstar_size: sstar.len(),
        letter_alphabet,
        letter_bits,
        recompression_iterations: loop_stats.per_j.clone(),
        recompression_removed: loop_stats.steps.iter().map(|s| s.removed).sum(),
        refine_lce_queries: refine_queries,
        stage1_lce_queries: stage1_stats.lce_queries,
        stage1_tree_builds: stage1_stats.tree_builds,
        letter_lce_queries: letter_stats.lce_queries,
        letter_tree_builds: letter_stats.tree_builds,
        wall_ms_refine: (t1 - t0).as_millis(),
        wall_ms_stage1: (t2 - t1).as_millis(),
        wall_ms_letters: (t3 - t2).as_millis(),
        wall_ms_recompression: (t4 - t3).as_millis(),
        wall_ms_extract: (t5 - t4).as_millis(),
    };
    Ok(BuildOutput { sstar, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::oracle;
    use crate::text::Overrides;

    #[test]
    fn sizes_are_monotone() {
        let t = corpus::text_of(corpus::mixed(1024, 4, 7));
        let params = ParamEnv::for_text(&t, 32, Mode::Desk, Overrides::default()).unwrap();
        let out = build_partition(&t, &params).unwrap();
        let s = &out.stats;
        assert!(s.sstar_size <= s.stage1_size);
        assert!(s.stage1_size <= s.refined_size);
        assert!(s.refined_size <= s.n);
        assert_eq!(s.r_initial, s.stage1_size);
        assert!((s.sstar_size as u128) * s.tau as u128 <= (1u128 << 16) * s.n as u128);
    }

    #[test]
    fn final_set_is_partitioning() {
        for seed in 0..3u64 {
            let t = corpus::text_of(corpus::mixed(1024, 4, seed));
            for tau in [16usize, 64] {
                let params =
                    ParamEnv::for_text(&t, tau, Mode::Desk, Overrides::default()).unwrap();
                let out = build_partition(&t, &params).unwrap();
                for rep in oracle::check_partitioning(&t, &out.sstar, tau) {
                    assert!(rep.holds(), "{} violated: {rep}", rep.property);
                }
            }
        }
    }

    #[test]
    fn desk_and_replay_paths_agree() {
        let t = corpus::text_of(corpus::mixed(2048, 3, 11));
        for tau in [32usize, 128] {
            let desk =
                ParamEnv::for_text(&t, tau, Mode::Desk, Overrides::default()).unwrap();
            let reference =
                ParamEnv::for_text(&t, tau, Mode::Reference, Overrides::default()).unwrap();
            let a = build_partition_with(&t, &desk, ProviderKind::Naive).unwrap();
            let b = build_partition_with(&t, &reference, ProviderKind::Naive).unwrap();
            // reference lambda4 is below the loop range, desk uses 10; at
            // this scale neither removes anything, so the sets agree and the
            // two extraction paths are interchangeable
            assert_eq!(a.sstar, b.sstar, "tau={tau}");
        }
    }

    #[test]
    fn builds_are_deterministic() {
        let t = corpus::text_of(corpus::mixed(1024, 4, 13));
        let params = ParamEnv::for_text(&t, 64, Mode::Desk, Overrides::default()).unwrap();
        let a = build_partition(&t, &params).unwrap();
        let b = build_partition(&t, &params).unwrap();
        assert_eq!(a.sstar, b.sstar);
        let sa = serde_json::to_string(&a.stats.without_wall_times()).unwrap();
        let sb = serde_json::to_string(&b.stats.without_wall_times()).unwrap();
        assert_eq!(sa, sb);
    }

    #[test]
    fn extreme_tau_builds_cleanly() {
        // tau at its upper bound n/2: giant windows, tiny sets
        for symbols in [corpus::random(64, 4, 3), vec![5; 64], corpus::random(4096, 2, 4)] {
            let t = corpus::text_of(symbols);
            let tau = t.len() / 2;
            let params = ParamEnv::for_text(&t, tau, Mode::Desk, Overrides::default()).unwrap();
            let out = build_partition(&t, &params).unwrap();
            for rep in oracle::check_partitioning(&t, &out.sstar, tau) {
                assert!(rep.holds(), "n={} tau={tau}: {}", t.len(), rep.property);
            }
            let index = crate::lce::LceIndex::build(&t, out.sstar, tau).unwrap();
            for p in (0..t.len()).step_by(7) {
                for q in (0..t.len()).step_by(11) {
                    assert_eq!(index.lce(p, q).unwrap(), oracle::naive_lce(&t, p, q));
                }
            }
        }
    }

    #[test]
    fn provider_choice_does_not_change_the_result() {
        let t = corpus::text_of(corpus::mixed(4096, 4, 17));
        let params = ParamEnv::for_text(&t, 256, Mode::Desk, Overrides::default()).unwrap();
        assert!(params.phase_count >= 1);
        let base = build_partition_with(&t, &params, ProviderKind::Naive).unwrap().sstar;
        for kind in [ProviderKind::WholeText, ProviderKind::Windowed, ProviderKind::Leveled] {
            let got = build_partition_with(&t, &params, kind).unwrap().sstar;
            assert_eq!(got, base, "{kind:?}");
        }
    }
}
