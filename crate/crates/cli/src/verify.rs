//! Verification levels over bundled deterministic corpora. Each level maps
//! to one group of guarantees; a level passes when every check over its
//! corpus reports zero violations.

use anyhow::{bail, Result};

use partix::corpus;
use partix::lce::LceIndex;
use partix::oracle;
use partix::pipeline::build_partition;
use partix::refine::{run_pipeline, ProviderKind};
use partix::sparsify;
use partix::sst_user::build_user_sst;
use partix::text::{Mode, Overrides, ParamEnv, Text, TextView};

struct Outcome {
    checks: usize,
    failures: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { checks: 0, failures: Vec::new() }
    }

    fn check(&mut self, name: &str, ok: bool, detail: impl Fn() -> String) {
        self.checks += 1;
        if ok {
            println!("ok   {name}");
        } else {
            let msg = format!("{name}: {}", detail());
            println!("FAIL {msg}");
            self.failures.push(msg);
        }
    }
}

fn texts(n: usize) -> Vec<(String, Text)> {
    let mut out = Vec::new();
    for seed in 0..3u64 {
        out.push((format!("random2/{seed}"), corpus::text_of(corpus::random(n, 2, seed))));
        out.push((format!("mixed/{seed}"), corpus::text_of(corpus::mixed(n, 4, seed))));
    }
    out.push(("fibonacci".into(), corpus::text_of(corpus::fibonacci(n))));
    out.push(("unary".into(), corpus::text_of(vec![3; n])));
    out
}

fn desk(text: &Text, tau: usize) -> ParamEnv {
    ParamEnv::for_text(text, tau, Mode::Desk, Overrides::default()).expect("valid tau")
}

fn level_phases(out: &mut Outcome) {
    for (name, text) in texts(512) {
        let params = desk(&text, 256);
        let direct = oracle::direct_refine_all(&text, &params);
        let streamed = run_pipeline(&text, &params, ProviderKind::WholeText);
        out.check(
            &format!("phases/stream-vs-direct/{name}"),
            streamed == *direct.last().unwrap(),
            || "streaming output differs from the direct evaluation".into(),
        );
        for (k, set) in direct.iter().enumerate().skip(1) {
            let tau_ab = 1usize << (k + 3);
            let tau_c = tau_ab * params.lambda3 as usize;
            let ok = oracle::check_property_a(&text, set, tau_ab).holds()
                && oracle::check_property_b(&text, set, tau_ab).holds()
                && oracle::check_property_c(&text, set, tau_c).holds();
            out.check(&format!("phases/contracts/{name}/k{k}"), ok, || {
                format!("{}", oracle::check_property_c(&text, set, tau_c))
            });
            let bound_ok = set.len() as u64 * (1u64 << k) <= 64 * text.len() as u64;
            out.check(&format!("phases/size/{name}/k{k}"), bound_ok, || {
                format!("|S_{k}| = {}", set.len())
            });
        }
    }
}

fn level_stage1(out: &mut Outcome) {
    for (name, text) in texts(512) {
        for tau in [16usize, 32] {
            let params = desk(&text, tau);
            let set = run_pipeline(&text, &params, ProviderKind::WholeText);
            let got = sparsify::stage1(&text, &params, &set);
            let expect = oracle::direct_stage1(&text, &set, tau);
            out.check(
                &format!("stage1/stream-vs-direct/{name}/tau{tau}"),
                got == expect,
                || "streaming first stage differs from the direct definition".into(),
            );
            let three_q = 3 * tau / 4;
            let ok = oracle::check_property_a(&text, &got, three_q).holds()
                && oracle::check_property_b(&text, &got, three_q).holds()
                && oracle::check_property_c(&text, &got, tau).holds()
                && oracle::check_c_converse(&text, &got, tau, three_q).holds();
            out.check(&format!("stage1/contracts/{name}/tau{tau}"), ok, || {
                "first-stage output violates a partitioning contract".into()
            });
        }
    }
}

fn level_letters(out: &mut Outcome) {
    for (name, text) in texts(512) {
        let tau = 64usize;
        if text.len() < 2 * tau {
            continue;
        }
        let params = desk(&text, tau);
        let set = run_pipeline(&text, &params, ProviderKind::WholeText);
        let sp = sparsify::stage1(&text, &params, &set);
        let r = match sparsify::build_r(&text, &params, &set, &sp) {
            Ok(r) => r,
            Err(e) => {
                out.check(&format!("letters/build/{name}"), false, || e.to_string());
                continue;
            }
        };
        let reach = tau >> 5;
        let mut distinct_ok = true;
        for i in 0..sp.len() {
            for k in i + 1..sp.len() {
                if sp[k] - sp[i] > reach {
                    break;
                }
                if r.letter_chunk(i) == r.letter_chunk(k) {
                    distinct_ok = false;
                }
            }
        }
        out.check(&format!("letters/distinct-close/{name}"), distinct_ok, || {
            "equal letters at close surviving positions".into()
        });
        let view = TextView::whole(&text);
        let ctx = 7 * tau / 8 + 1;
        let mut locality_ok = true;
        for i in 0..sp.len() {
            for k in i + 1..sp.len() {
                if view.windows_equal(sp[i], sp[k], ctx)
                    && r.letter_chunk(i) != r.letter_chunk(k)
                {
                    locality_ok = false;
                }
            }
        }
        out.check(&format!("letters/equal-context/{name}"), locality_ok, || {
            "distinct letters despite equal long contexts".into()
        });
    }
}

fn level_recompression(out: &mut Outcome) {
    // greedy-cut guarantee over random sparse matrices
    let mut rng = corpus::SplitMix64::new(17);
    let mut cut_ok = true;
    for _ in 0..200 {
        let mut p = std::collections::BTreeMap::new();
        for _ in 0..(1 + rng.below(10)) {
            let a = rng.below(8) as u32;
            let b = rng.below(8) as u32;
            if a != b {
                *p.entry((a, b)).or_insert(0u64) += 1 + rng.below(9);
            }
        }
        let cut = sparsify::greedy_cut(&p, 8);
        if 4 * cut.forward_weight < cut.total_weight {
            cut_ok = false;
        }
    }
    out.check("recompression/greedy-cut-quarter", cut_ok, || {
        "directed cut below a quarter of the total weight".into()
    });

    for (name, text) in texts(1024) {
        let params = ParamEnv::for_text(
            &text,
            64,
            Mode::Desk,
            Overrides { lambda3: None, lambda4: Some(10) },
        )
        .expect("valid tau");
        let set = run_pipeline(&text, &params, ProviderKind::WholeText);
        let sp = sparsify::stage1(&text, &params, &set);
        let mut r = match sparsify::build_r(&text, &params, &set, &sp) {
            Ok(r) => r,
            Err(e) => {
                out.check(&format!("recompression/build/{name}"), false, || e.to_string());
                continue;
            }
        };
        match sparsify::recompress_loop(&mut r, &params) {
            Ok((_, stats)) => {
                let iters_ok = stats.per_j.iter().all(|&(_, it)| it <= 3);
                out.check(&format!("recompression/loop-iterations/{name}"), iters_ok, || {
                    format!("{:?}", stats.per_j)
                });
            }
            Err(e) => {
                out.check(&format!("recompression/loop/{name}"), false, || e.to_string());
            }
        }
        // shrink assertions fire inside forced rounds (panics on violation)
        let mut forced = sparsify::build_r(&text, &params, &set, &sp).unwrap();
        let mut shrink_ok = true;
        for j in params.recompression_range() {
            for _ in 0..3 {
                let before: u64 = (1..forced.len().saturating_sub(1))
                    .filter(|&i| forced.m[i][j as usize] != 0 && forced.m[i - 1][5] != 0)
                    .count() as u64;
                if before == 0 {
                    break;
                }
                let st = sparsify::recompress_step(&mut forced, j, true);
                if 4 * st.eligible_after > 3 * st.eligible_before {
                    shrink_ok = false;
                }
            }
        }
        out.check(&format!("recompression/step-shrink/{name}"), shrink_ok, || {
            "a forced round kept more than 3/4 of the eligible pairs".into()
        });
    }
}

fn level_final(out: &mut Outcome) {
    for (name, text) in texts(1024) {
        for tau in [16usize, 64] {
            let params = desk(&text, tau);
            let built = build_partition(&text, &params).expect("pipeline");
            let mut ok = true;
            let mut detail = String::new();
            for rep in oracle::check_partitioning(&text, &built.sstar, tau) {
                if !rep.holds() {
                    ok = false;
                    detail = format!("{}: {rep}", rep.property);
                }
            }
            out.check(&format!("final/contracts/{name}/tau{tau}"), ok, || detail.clone());
            let size_ok = (built.sstar.len() as u128) * tau as u128
                <= (1u128 << 16) * text.len() as u128;
            out.check(&format!("final/size/{name}/tau{tau}"), size_ok, || {
                format!("|S*| = {}", built.sstar.len())
            });
        }
    }
}

fn level_lce(out: &mut Outcome) {
    for (name, text) in texts(1024) {
        let tau = 32usize;
        let params = desk(&text, tau);
        let built = build_partition(&text, &params).expect("pipeline");
        let index = LceIndex::build(&text, built.sstar, tau).expect("index");
        let mut rng = corpus::SplitMix64::new(5);
        let mut exact = true;
        let mut cost_ok = true;
        for _ in 0..4000 {
            let p = rng.below(text.len() as u64) as usize;
            let q = rng.below(text.len() as u64) as usize;
            let (got, trace) = index.lce_traced(p, q).expect("in range");
            if got != oracle::naive_lce(&text, p, q) {
                exact = false;
            }
            if trace.reads > 32 * (tau + 1) || trace.jumps > 1 {
                cost_ok = false;
            }
        }
        out.check(&format!("lce/exact/{name}"), exact, || "answer differs from naive".into());
        out.check(&format!("lce/cost/{name}"), cost_ok, || {
            "a query exceeded the read budget".into()
        });
    }
}

fn level_sst(out: &mut Outcome) {
    for (name, text) in texts(1024) {
        let tau = 32usize;
        let params = desk(&text, tau);
        let built = build_partition(&text, &params).expect("pipeline");
        let index = LceIndex::build(&text, built.sstar, tau).expect("index");
        let core_ok = oracle::trees_isomorphic(
            index.tree(),
            &oracle::oracle_trie(&text, index.sstar()),
            TextView::whole(&text),
        );
        out.check(&format!("sst/core/{name}"), core_ok, || {
            "core tree differs from the reference trie".into()
        });
        let mut rng = corpus::SplitMix64::new(9);
        let mut chosen: Vec<usize> =
            (0..48).map(|_| rng.below(text.len() as u64) as usize).collect();
        chosen.sort_unstable();
        chosen.dedup();
        let tree = build_user_sst(&text, &chosen, &index).expect("user tree");
        let user_ok =
            oracle::trees_isomorphic(&tree, &oracle::oracle_trie(&text, &chosen), TextView::whole(&text));
        out.check(&format!("sst/user/{name}"), user_ok, || {
            "user tree differs from the reference trie".into()
        });
    }
}

pub fn run(level: &str) -> Result<bool> {
    let mut out = Outcome::new();
    match level {
        "phases" => level_phases(&mut out),
        "stage1" => level_stage1(&mut out),
        "letters" => level_letters(&mut out),
        "recompression" => level_recompression(&mut out),
        "final" => level_final(&mut out),
        "lce" => level_lce(&mut out),
        "sst" => level_sst(&mut out),
        other => bail!("unknown verify level {other:?}"),
    }
    println!(
        "{}: {} checks, {} failures",
        level,
        out.checks,
        out.failures.len()
    );
    Ok(out.failures.is_empty())
}
