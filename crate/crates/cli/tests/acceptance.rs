//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line each, and exits non-zero if any failed.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use align_bench::beamformer::{
    build_design, build_generator_set, required_realizations, save_design, BeamformingDesign,
};
use align_bench::channel::{generate_channels, save_channels, ChannelSet, DEFAULT_H_MAX, DEFAULT_H_MIN};
use align_bench::dof::{gain_table, generator_count, mimo_gain, proposed_gain, stream_counts, Scheme};
use align_bench::linksim::estimate_slope;
use align_bench::numerics::{DenseMatrix, C64};
use align_bench::verifier::verify_design;
use align_bench::Error;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Counts length-`n` non-negative integer vectors with sum at most `budget`
/// by walking every one of them.
fn brute_force_count(n: usize, budget: u32) -> u64 {
    if n == 0 {
        return 1;
    }
    (0..=budget).map(|first| brute_force_count(n - 1, budget - first)).sum()
}

fn formula_suite() -> Outcome {
    let mut cases = 0;
    for k in 3..=5usize {
        let n = generator_count(k).map_err(|e| e.to_string())?;
        for ns in 0..=4u32 {
            let d3 = brute_force_count(n, ns);
            let d1 = brute_force_count(n, ns + 1);
            let sc = stream_counts(k, u64::from(ns)).map_err(|e| e.to_string())?;
            ensure(sc.d3 == BigUint::from(d3) && sc.d1 == BigUint::from(d1), || {
                format!("K={k} n*={ns}: counts ({}, {}) vs enumeration ({d3}, {d1})", sc.d3, sc.d1)
            })?;
            let gain = BigRational::new(
                BigInt::from((k as u64 - 1) * d3 + d1),
                BigInt::from(d3 + d1),
            );
            let lib = proposed_gain(k, u64::from(ns)).map_err(|e| e.to_string())?;
            ensure(lib == gain, || format!("K={k} n*={ns}: gain {lib} vs enumeration {gain}"))?;
            let ratio = BigRational::new(BigInt::from(d1), BigInt::from(d3));
            let closed = q((ns as usize + n + 1) as i64, i64::from(ns) + 1);
            ensure(ratio == closed, || format!("K={k} n*={ns}: d1/d3 = {ratio}, expected {closed}"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} (K, n*) cases exact"))
}

fn envelope_dominance() -> Outcome {
    let max_b = 10_000u64;
    let t4 = gain_table(4, max_b).map_err(|e| e.to_string())?;
    let proposed = t4.envelope_by_budget(Scheme::Proposed);
    let original = t4.envelope_by_budget(Scheme::Original);
    let mut first = None;
    let mut compared = 0;
    for b in 7..=max_b as usize {
        let prop = proposed[b]
            .clone()
            .ok_or_else(|| format!("K=4: no proposed point within B={b}"))?;
        if let Some(orig) = original[b].clone() {
            ensure(prop > orig, || format!("K=4 B={b}: proposed {prop} <= original {orig}"))?;
            first.get_or_insert((b, prop, orig));
            compared += 1;
        }
    }
    let (b, prop, orig) = first.ok_or("K=4: original scheme never feasible")?;
    ensure(b == 33 && prop == q(13, 9) && orig == q(35, 33), || {
        format!("first comparison at B={b}: {prop} vs {orig}, expected B=33: 13/9 vs 35/33")
    })?;
    let t3 = gain_table(3, max_b).map_err(|e| e.to_string())?;
    let (p3, o3) = (t3.envelope_by_budget(Scheme::Proposed), t3.envelope_by_budget(Scheme::Original));
    for b in 3..=max_b as usize {
        ensure(p3[b] == o3[b], || format!("K=3 B={b}: envelopes differ ({:?} vs {:?})", p3[b], o3[b]))?;
    }
    Ok(format!("K=4 strict on {compared} budgets from B=33 (13/9 > 35/33); K=3 identical"))
}

fn build(k: usize, n_star: u32, seed: u64) -> Result<(ChannelSet, BeamformingDesign), String> {
    let m = required_realizations(k, n_star).map_err(|e| e.to_string())?;
    let cs = generate_channels(k, m, seed, DEFAULT_H_MIN, DEFAULT_H_MAX).map_err(|e| e.to_string())?;
    let design = build_design(&cs, n_star).map_err(|e| format!("K={k} n*={n_star} seed={seed}: {e}"))?;
    Ok((cs, design))
}

fn construction_suite() -> Outcome {
    let configs = [(3usize, 0u32), (3, 1), (3, 2), (4, 0), (4, 1), (5, 0), (5, 1)];
    let mut runs = 0;
    let mut worst_residual = 0f64;
    for (k, n_star) in configs {
        for seed in 0..20 {
            let (cs, design) = build(k, n_star, seed)?;
            let m = cs.realizations();
            let report = verify_design(&cs, &design, 1e-8).map_err(|e| e.to_string())?;
            let tag = format!("K={k} n*={n_star} seed={seed}");
            ensure(report.overall(), || format!("{tag}: failed {:?}", report.failed_checks()))?;
            for r in &report.rx1_alignment {
                worst_residual = worst_residual.max(r.residual);
                ensure(r.residual < 1e-10, || format!("{tag}: user {} residual {:e}", r.user, r.residual))?;
            }
            ensure(report.inclusions_pass(), || format!("{tag}: inclusion failed"))?;
            for e in &report.effective_ranks {
                ensure(e.rank == m && e.required == m, || {
                    format!("{tag}: receiver {} rank {} of {}x{}", e.receiver, e.rank, m, e.required)
                })?;
            }
            runs += 1;
        }
    }
    Ok(format!("{runs}/{runs} runs pass at tol 1e-8, worst residual {worst_residual:.1e}"))
}

fn slope_suite() -> Outcome {
    let cases = [(3usize, 0u32, q(4, 3)), (3, 1, q(7, 5)), (4, 0, q(9, 7))];
    let mut worst = [0f64; 2];
    for (k, n_star, target) in cases {
        ensure(proposed_gain(k, u64::from(n_star)).ok() == Some(target.clone()), || {
            format!("K={k} n*={n_star}: target gain is not {target}")
        })?;
        for seed in 0..5 {
            let (cs, design) = build(k, n_star, seed)?;
            for (slot, (lo, hi, limit)) in [(40.0, 60.0, 0.05), (60.0, 80.0, 0.02)].into_iter().enumerate() {
                let r = estimate_slope(&cs, &design, lo, hi).map_err(|e| e.to_string())?;
                ensure(r.target_gain == target, || format!("report target {} != {target}", r.target_gain))?;
                worst[slot] = worst[slot].max(r.relative_deviation);
                ensure(r.relative_deviation < limit, || {
                    format!(
                        "K={k} n*={n_star} seed={seed} [{lo},{hi}] dB: slope {:.5} vs {target}, deviation {:.3e}",
                        r.normalized_slope, r.relative_deviation
                    )
                })?;
            }
        }
    }
    Ok(format!("worst deviation {:.2e} over 40-60 dB, {:.2e} over 60-80 dB", worst[0], worst[1]))
}

fn asymptotics() -> Outcome {
    for k in 3..=6usize {
        let n = generator_count(k).map_err(|e| e.to_string())? as i64;
        let half = q(k as i64, 2);
        let mut last = BigRational::zero();
        for ns in 0..=50i64 {
            let g = proposed_gain(k, ns as u64).map_err(|e| e.to_string())?;
            ensure(g > last, || format!("K={k} n*={ns}: {g} not above {last}"))?;
            let gap = &half - &g;
            ensure(gap < q(n, ns + 2), || format!("K={k} n*={ns}: K/2 - gain = {gap} >= N/(n*+2)"))?;
            last = g;
        }
    }
    Ok("K=3..6, n*=0..50".into())
}

fn mimo_reduction() -> Outcome {
    for k in 3..=6usize {
        for ns in 0..=10u64 {
            let single = proposed_gain(k, ns).map_err(|e| e.to_string())?;
            let mimo = mimo_gain(k, 1, ns).map_err(|e| e.to_string())?;
            ensure(single == mimo, || format!("K={k} n*={ns}: {mimo} vs {single}"))?;
        }
    }
    let g = mimo_gain(3, 2, 0).map_err(|e| e.to_string())?;
    ensure(g == q(25, 21), || format!("mimo_gain(3, 2, 0) = {g}, expected 25/21"))?;
    Ok("single-antenna match for K=3..6, n*=0..10; mimo_gain(3,2,0) = 25/21".into())
}

fn drop_last_column(v: &DenseMatrix) -> DenseMatrix {
    v.select_columns(&(0..v.cols() - 1).collect::<Vec<_>>())
}

/// Runs `align-bench verify` on the pair and returns (exit code, stderr).
fn cli_verify(cs: &ChannelSet, design: &BeamformingDesign, dir: &Path, name: &str) -> Result<(i32, String), String> {
    let cpath = dir.join(format!("{name}-channels.json"));
    let dpath = dir.join(format!("{name}-design.json"));
    save_channels(cs, &cpath).map_err(|e| e.to_string())?;
    save_design(design, &dpath).map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_align-bench"))
        .args(["verify", "--channels"])
        .arg(&cpath)
        .arg("--design")
        .arg(&dpath)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned()))
}

fn negative_fixtures() -> Outcome {
    let ident = ChannelSet::identity(3, 3).map_err(|e| e.to_string())?;
    match build_design(&ident, 0) {
        Err(Error::Degenerate { .. }) => {}
        other => return Err(format!("identity channels: expected rank collapse, got {other:?}")),
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (cs, good) = build(4, 1, 3)?;
    let m = cs.realizations();
    let (code, _) = cli_verify(&cs, &good, dir.path(), "good")?;
    ensure(code == 0, || format!("unmutated design: verify exited {code}"))?;

    let mut deleted = good.clone();
    deleted.replace_v(1, drop_last_column(good.v(1))).map_err(|e| e.to_string())?;

    let gens = build_generator_set(&cs).map_err(|e| e.to_string())?;
    let ones = vec![C64::new(1.0, 0.0); m];
    let mut short = good.clone();
    short
        .replace_v(1, gens.family(1, &ones).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;

    let mut random = good.clone();
    let d2 = good.d(2);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let cols: Vec<Vec<C64>> = (0..d2)
        .map(|_| (0..m).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect();
    random
        .replace_v(2, DenseMatrix::from_columns(m, &cols).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;

    // (fixture, intended check, checks that necessarily move with it)
    let fixtures: [(&str, &BeamformingDesign, &str, &[&str]); 3] = [
        ("deleted V1 column", &deleted, "table1_inclusions", &["stream_counts"]),
        ("off-by-one V1 budget", &short, "stream_counts", &["table1_inclusions"]),
        ("random V2", &random, "rx1_alignment", &[]),
    ];
    let mut summary = Vec::new();
    for (i, (label, design, intended, coupled)) in fixtures.into_iter().enumerate() {
        let report = verify_design(&cs, design, 1e-8).map_err(|e| e.to_string())?;
        let failed = report.failed_checks();
        ensure(failed.contains(&intended), || format!("{label}: {intended} did not fail ({failed:?})"))?;
        ensure(failed.iter().all(|c| *c == intended || coupled.contains(c)), || {
            format!("{label}: unrelated checks failed: {failed:?}")
        })?;
        let (code, stderr) = cli_verify(&cs, design, dir.path(), &format!("mut{i}"))?;
        ensure(code == 4, || format!("{label}: verify exited {code}"))?;
        ensure(stderr.contains(intended), || format!("{label}: stderr does not name {intended}"))?;
        summary.push(format!("{label} -> {intended}"));
    }
    Ok(format!("identity rejected; {}; verify exits 4", summary.join(", ")))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 formula suite", formula_suite, Duration::from_secs(1)),
        ("2 envelope dominance", envelope_dominance, Duration::from_secs(1)),
        ("3 construction/verification", construction_suite, Duration::from_secs(120)),
        ("4 slope reproduction", slope_suite, Duration::from_secs(10)),
        ("5 asymptotics", asymptotics, Duration::from_secs(60)),
        ("6 multi-antenna reduction", mimo_reduction, Duration::from_secs(60)),
        ("7 negative fixtures", negative_fixtures, Duration::from_secs(60)),
    ];
    let mut failures = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail} [{elapsed:.2?}]"),
            Err(why) => {
                failures += 1;
                println!("FAIL  criterion {name}: {why} [{elapsed:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 7 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
