//! One PASS/FAIL line per acceptance criterion.

mod common;

use common::*;
use num_rational::Ratio;
use rackmsr::codes::{subsets, RackCode, SweepMode};
use rackmsr::gf::Felt;
use rackmsr::identities::run_all;
use rackmsr::kernels::projection;
use rackmsr::matrix::Mat;
use rackmsr::params::{omega, Theorem};
use rackmsr::repair::{default_extra, plan, repair};
use rand::seq::SliceRandom;
use rand::Rng;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

/// Name, check, runtime budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, Option<u64>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden() -> Outcome {
    let code = example();
    let f = &code.field;
    for (i, want) in displayed_blocks(f).iter().enumerate() {
        ensure(code.block(i) == want, || format!("H_{i} differs from the display"))?;
    }
    let h0 = code.block(0);
    ensure((0..4).all(|t| h0.get(t, 0) == Felt::ONE), || "H_0 block (0,0) is not all ones".into())?;
    ensure(code.block(1).get(1, 0) == f.neg(Felt::ONE), || "H_1 does not evaluate at −λ_0".into())?;
    Ok("H_0..H_7 match".into())
}

fn mds_exhaustive() -> Outcome {
    let code = example();
    let word = random_word(&code, &mut rng(2));
    let mut ok = 0;
    for erased in subsets(8, 4) {
        let mut damaged = word.clone();
        for &i in &erased {
            damaged.nodes[i] = vec![Felt::ZERO; code.params.l];
        }
        let back = code.erase_decode(&damaged, &erased).map_err(|e| format!("{erased:?}: {e}"))?;
        ensure(back == word, || format!("{erased:?} decoded wrongly"))?;
        ok += 1;
    }
    ensure(ok == 70, || format!("{ok} patterns"))?;
    Ok("70/70 decode".into())
}

fn repair_equality() -> Outcome {
    let code = example();
    let word = random_word(&code, &mut rng(3));
    let mut cases = 0;
    for host in 0..4 {
        let others: Vec<usize> = (0..4).filter(|&j| j != host).collect();
        for pick in subsets(3, 3) {
            let helpers: Vec<usize> = pick.iter().map(|&i| others[i]).collect();
            let pl = plan(&code, host, &[0, 1], &helpers, None).map_err(|e| e.to_string())?;
            let res = repair(&code, &word, &pl).map_err(|e| e.to_string())?;
            ensure(res.exact, || format!("host {host}: wrong contents"))?;
            ensure(res.bandwidth == 12 && res.access == 12, || {
                format!("host {host}: bandwidth {} access {}", res.bandwidth, res.access)
            })?;
            ensure(res.optimal_bw && res.optimal_access, || format!("host {host}: not optimal"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} host/helper cases at bandwidth 12, access 12"))
}

fn extra_rack() -> Outcome {
    let code = searched(12, 5, 2, 3, Theorem::T1);
    let p = &code.params;
    ensure((p.v, p.s, p.l) == (1, 2, 8), || format!("v={} s̄={} l={}", p.v, p.s, p.l))?;
    let q = code.field.q() as usize;
    ensure((q - 1).is_multiple_of(p.u), || format!("u does not divide q−1 = {}", q - 1))?;
    let word = random_word(&code, &mut rng(4));
    let helpers = [1, 2, 3];
    let pl = plan(&code, 0, &[0, 1], &helpers, default_extra(&code, 0, &helpers)).map_err(|e| e.to_string())?;
    let res = repair(&code, &word, &pl).map_err(|e| e.to_string())?;
    ensure(res.exact, || "wrong contents".into())?;
    let formula = p.d_bar * 2 * p.l / p.s + (2 - p.u + p.v) * p.l / p.s;
    ensure(res.bandwidth == 28 && formula == 28, || format!("bandwidth {}", res.bandwidth))?;
    ensure(res.bound_bw == 24, || format!("bound {}", res.bound_bw))?;
    ensure(res.ratio == Ratio::new(7, 6), || format!("ratio {}", res.ratio))?;
    ensure(res.ratio < Ratio::new(4, 3), || "ratio not below 1 + 1/d̄".into())?;
    Ok(format!("q={q}, bandwidth 28 / 24 = 7/6 < 4/3"))
}

fn theorem_two() -> Outcome {
    let t2 = searched(12, 6, 2, 4, Theorem::T2);
    let t1 = searched(12, 6, 2, 4, Theorem::T1);
    let p = &t2.params;
    ensure((p.n_bar, p.s) == (6, 2), || format!("n̄={} s̄={}", p.n_bar, p.s))?;
    ensure(p.l == 4 && t1.params.l == 8, || format!("l = {} vs {}", p.l, t1.params.l))?;
    let sweep = t2.mds_sweep(SweepMode::Sample { count: 500, seed: 5 });
    ensure(sweep.checked >= 500 && sweep.pass(), || {
        format!("{} of {} patterns fail", sweep.failures.len(), sweep.checked)
    })?;
    let mut r = rng(5);
    let mut last_hosts = 0;
    for t in 0..200 {
        let word = random_word(&t2, &mut r);
        let host = t % p.n_bar;
        let h = r.gen_range(1..=p.u - p.v);
        let mut gs: Vec<usize> = (0..p.u).collect();
        gs.shuffle(&mut r);
        let helpers = random_helpers(&t2, host, &mut r);
        let pl = plan(&t2, host, &gs[..h], &helpers, None).map_err(|e| e.to_string())?;
        last_hosts += usize::from(pl.last_position);
        let res = repair(&t2, &word, &pl).map_err(|e| format!("trial {t}: {e}"))?;
        ensure(res.exact, || format!("trial {t}: wrong contents"))?;
        ensure(res.bandwidth == p.d_bar * h * p.l / p.s, || format!("trial {t}: bandwidth {}", res.bandwidth))?;
    }
    ensure(last_hosts > 0, || "no last-position host exercised".into())?;
    Ok(format!("l=4 vs 8, {} sampled patterns, 200 repairs ({last_hosts} last-position)", sweep.checked))
}

fn kernels() -> Outcome {
    let suites = run_all(6, 50).map_err(|e| e.to_string())?;
    for s in &suites {
        ensure(s.cases >= 50 && s.pass(), || format!("{}: {:?}", s.name, s.failures.first()))?;
    }
    Ok(format!("{} suites × ≥50 instances", suites.len()))
}

fn folding_one(code: &RackCode, seed: u64) -> Result<(), String> {
    let p = &code.params;
    let f = &code.field;
    let mut r = rng(seed);
    for i in 0..100 {
        let word = random_word(code, &mut r);
        let junk = noise(code, &mut r);
        for w in 0..p.u {
            let view = code.fold(&word, w).map_err(|e| e.to_string())?;
            ensure(code.folded_residual(&view).is_zero(), || format!("word {i} w={w}: nonzero folded residual"))?;
            let q = Mat::identity(f, p.l).kron(&projection(f, p.u, p.v, p.r, w).map_err(|e| e.to_string())?).unwrap();
            for c in [&word, &junk] {
                let full = q.matmul(&code.parity_residual(c).unwrap()).unwrap();
                let folded = code.folded_residual(&code.fold(c, w).unwrap());
                ensure(full == folded, || format!("word {i} w={w}: projection mismatch"))?;
            }
        }
    }
    Ok(())
}

fn folding() -> Outcome {
    let codes = [
        ("(8,4,2,3) T1", example()),
        ("(12,5,2,3) T1", searched(12, 5, 2, 3, Theorem::T1)),
        ("(12,6,2,4) T1", searched(12, 6, 2, 4, Theorem::T1)),
        ("(12,6,2,4) T2", searched(12, 6, 2, 4, Theorem::T2)),
        ("(6,2,2,2) T1", searched(6, 2, 2, 2, Theorem::T1)),
    ];
    for (i, (name, code)) in codes.iter().enumerate() {
        folding_one(code, 70 + i as u64).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(format!("{} configurations × 100 words", codes.len()))
}

fn omega_values() -> Outcome {
    // term-by-term: each summand listed for s̄ = u = 2
    let terms: [u128; 5] = [0, 2, 12, 48, 36];
    let by_hand = terms.iter().sum::<u128>() / 2;
    ensure(omega(2, 2) == 49 && by_hand == 49, || format!("omega(2,2) = {}", omega(2, 2)))?;
    for s in 2..=8u64 {
        ensure(omega(s, 1) == (s as u128 - 1) << (s - 2), || format!("omega({s},1) = {}", omega(s, 1)))?;
    }
    Ok("omega(2,2)=49, omega(s̄,1) for s̄ in 2..=8".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("golden example", golden, Some(1)),
        ("MDS exhaustive", mds_exhaustive, Some(10)),
        ("repair bandwidth equality", repair_equality, Some(10)),
        ("h > u−v regime", extra_rack, None),
        ("smaller sub-packetization", theorem_two, Some(60)),
        ("kernel identities", kernels, Some(30)),
        ("folding consistency", folding, None),
        ("omega and thresholds", omega_values, None),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = run();
        let took = start.elapsed();
        if let (Ok(_), Some(secs)) = (&outcome, budget) {
            if took > Duration::from_secs(*secs) {
                outcome = Err(format!("took {took:.2?}, budget {secs}s"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} ({took:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} ({took:.2?})", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
