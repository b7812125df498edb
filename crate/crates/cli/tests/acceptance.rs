//! One pass/fail line per acceptance criterion. Exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use hyh_cli::bench::{bench_riccati, bench_update, BenchRecord, Flips, RiccatiBench, UpdateBench};
use hyh_cli::timing::pin_current_thread;
use hyh_cli::verify::{
    block_transformation_gaps, count_gap, flip_patterns, random_kernel_case, random_ocp, run, Fault, KernelCase,
    Report, Scope,
};
use hyh_core::hyh::FlopCounter;
use hyh_core::probgen::{gen_spd_factor, gen_update, GenConfig};
use hyh_core::riccati::{riccati_factor, riccati_update_in_place, RiccatiWorkspace, UpdateOptions};

const SEED: u64 = 20_240_601;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

/// Worst value and failure count of the named invariants.
fn worst(report: &Report, names: &[&str]) -> (f64, usize, usize) {
    let picked: Vec<_> = report.checks.iter().filter(|c| names.contains(&c.invariant)).collect();
    let w = picked.iter().map(|c| c.value).fold(0.0, f64::max);
    let failed = picked.iter().filter(|c| !c.passed()).count();
    (w, failed, picked.len())
}

fn first_failures(report: &Report, names: &[&str]) -> String {
    report
        .failures()
        .filter(|c| names.contains(&c.invariant))
        .take(3)
        .map(|c| format!(" [{} seed={} value={:.2e} {}]", c.invariant, c.seed, c.value, c.note.as_deref().unwrap_or("")))
        .collect()
}

fn from_report(report: &Report, names: &[&str], extra_ok: bool, extra: String) -> Outcome {
    let (w, failed, n) = worst(report, names);
    let ok = failed == 0 && n > 0 && extra_ok;
    outcome(
        ok,
        format!("{n} checks, {failed} failed, worst {w:.2e}{extra}{}", first_failures(report, names)),
    )
}

fn c2_block_sweep(kernels: &Report) -> Outcome {
    let base = from_report(kernels, &["kernel.s_orthogonality", "kernel.annihilation"], true, String::new());
    let mut worst_o = 0.0f64;
    let mut worst_a = 0.0f64;
    let mut runs = 0;
    for seed in 0..40 {
        let case = match random_kernel_case(SEED + 10_000 + seed, 48, 32, Fault::None) {
            Ok(c) => c,
            Err(e) => return outcome(false, format!("generation failed: {e}")),
        };
        for k in [1, 2, 3, 5, 8, 13, 21, 32] {
            match block_transformation_gaps(&case, k) {
                Ok((o, a)) => {
                    worst_o = worst_o.max(o);
                    worst_a = worst_a.max(a);
                    runs += 1;
                }
                Err(e) => return outcome(false, format!("seed {seed} k {k}: {e}")),
            }
        }
    }
    let ok = base.ok && worst_o <= 1e-11 && worst_a <= 1e-11;
    outcome(
        ok,
        format!(
            "{}; k sweep over {runs} blocks: orthogonality {worst_o:.2e}, annihilation {worst_a:.2e} (tol 1e-11)",
            base.detail
        ),
    )
}

fn c4_counts() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, m, r) in [(8usize, 2usize, 1usize), (16, 4, 4), (64, 8, 8)] {
        let cfg = GenConfig::new(SEED + n as u64);
        let res = gen_spd_factor(&cfg, n).and_then(|l| {
            let signs: Vec<f64> = (0..m).map(|p| if p % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let (a, sigma) = gen_update(&cfg, &l, &signs)?;
            count_gap(&KernelCase { l, a, sigma }, r)
        });
        match res {
            Ok(g) => {
                ok &= g <= 1.0;
                parts.push(format!(
                    "({n},{m},{r}) closed form {} gap {:.2}·4n",
                    FlopCounter::predicted_fma(n, m, r),
                    g
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("({n},{m},{r}) error {e}"));
            }
        }
    }
    outcome(ok, parts.join(", "))
}

/// Updates that hit the default rank budget across the equivalence set.
fn natural_fallbacks(cases: u64) -> Result<(usize, usize), String> {
    let mut hits = 0;
    let mut total = 0;
    for i in 0..cases {
        let s = SEED.wrapping_add(i);
        let (data, s0) = random_ocp(s).map_err(|e| e.to_string())?;
        let f0 = riccati_factor(&data, &s0).map_err(|e| e.to_string())?;
        for (_, s1) in flip_patterns(&s0, s).map_err(|e| e.to_string())? {
            let mut f = f0.clone();
            let rep = riccati_update_in_place(&data, &s0, &s1, &mut f, &mut RiccatiWorkspace::new(), UpdateOptions::default())
                .map_err(|e| e.to_string())?;
            hits += rep.fallback.is_some() as usize;
            total += 1;
        }
    }
    Ok((hits, total))
}

fn rows<'a>(rs: &'a [BenchRecord], method: &str) -> impl Iterator<Item = &'a BenchRecord> + 'a {
    let method = method.to_string();
    rs.iter().filter(move |r| r.method == method)
}

fn c7_kernel_speed() -> Outcome {
    let b = UpdateBench {
        n: 64,
        ms: vec![1, 2, 3, 4],
        rs: vec![8],
        reps: 41,
        seed: SEED,
    };
    let recs = match bench_update(&b) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (full, upd) in rows(&recs, "full_factorization").zip(rows(&recs, "hyh_update")) {
        let ratio = upd.median_ns as f64 / full.median_ns as f64;
        ok &= ratio <= 0.5;
        parts.push(format!("m={} {:.2}", full.m.unwrap_or(0), ratio));
    }
    outcome(ok, format!("update/refactor medians (≤ 0.50, reps {}): {}", b.reps, parts.join(", ")))
}

fn riccati_ratios(ncs: Vec<usize>, flips: Flips, reps: usize) -> Result<Vec<(usize, f64, f64)>, String> {
    let b = RiccatiBench {
        horizon: 24,
        nx: 24,
        nu: 8,
        ncs,
        flips,
        reps,
        seed: SEED,
    };
    let recs = bench_riccati(&b).map_err(|e| e.to_string())?;
    Ok(rows(&recs, "riccati_factor")
        .zip(rows(&recs, "riccati_update"))
        .zip(rows(&recs, "riccati_solve"))
        .map(|((f, u), s)| (f.nc.unwrap_or(0), u.median_ns as f64 / f.median_ns as f64, s.residual))
        .collect())
}

fn c8_ocp_speed() -> (Outcome, f64) {
    let reps = 61;
    let quarter = riccati_ratios(vec![4, 8], Flips::Fraction(0.25), reps);
    let single = riccati_ratios(vec![4, 8, 16, 32], Flips::Count(1), reps);
    let (quarter, single) = match (quarter, single) {
        (Ok(q), Ok(s)) => (q, s),
        (Err(e), _) | (_, Err(e)) => return (outcome(false, e), f64::INFINITY),
    };
    let ok = quarter.iter().all(|q| q.1 < 1.0) && single.iter().all(|s| s.1 <= 0.5);
    let fmt = |v: &[(usize, f64, f64)]| v.iter().map(|(nc, r, _)| format!("nc={nc} {r:.2}")).collect::<Vec<_>>().join(", ");
    let kkt = quarter.iter().chain(&single).map(|x| x.2).fold(0.0, f64::max);
    (
        outcome(
            ok,
            format!("25% flips (< 1): {}; single flip (≤ 0.50): {}; reps {reps}", fmt(&quarter), fmt(&single)),
        ),
        kkt,
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();

    let t = Instant::now();
    let kernels = run(Scope::Kernels, SEED, 500, Fault::None);
    let kernel_secs = t.elapsed().as_secs_f64();
    let riccati = run(Scope::Riccati, SEED, 100, Fault::None);

    results.push((
        1,
        "update reconstruction",
        from_report(
            &kernels,
            &["kernel.reconstruction"],
            kernel_secs < 60.0,
            format!(" (tol 1e-10), 500 cases × r∈{{1,2,4,8}}, suite {kernel_secs:.1} s (< 60 s)"),
        ),
    ));
    results.push((2, "S-orthogonality and annihilation", c2_block_sweep(&kernels)));
    results.push((
        3,
        "oracle equivalence",
        from_report(
            &kernels,
            &["kernel.oracle_equivalence", "kernel.sign_preservation"],
            true,
            " (tol 1e-9, positive diagonals)".into(),
        ),
    ));
    results.push((4, "operation counts", c4_counts()));

    let fb = natural_fallbacks(100);
    let (fb_ok, fb_note) = match &fb {
        Ok((h, n)) => (true, format!("; {h} of {n} default updates fell back, every case also forced through fallback")),
        Err(e) => (false, format!("; fallback census failed: {e}")),
    };
    results.push((
        5,
        "Riccati update equals refactorization",
        from_report(
            &riccati,
            &["riccati.update_equivalence", "riccati.fallback_equivalence"],
            fb_ok,
            format!(" (tol 1e-8), 100 OCPs × one/25%/all flips{fb_note}"),
        ),
    ));

    // Pinning after the parallel suites; threads spawned later inherit it.
    let pinned = pin_current_thread();
    results.push((7, "kernel-scale speedup", c7_kernel_speed()));
    let (c8, bench_kkt) = c8_ocp_speed();
    results.push((
        6,
        "Newton step",
        from_report(
            &riccati,
            &["riccati.kkt_residual", "riccati.dense_kkt"],
            bench_kkt <= 1e-9,
            format!(" (kkt 1e-9, dense 1e-8 for N ≤ 8); benchmark instances kkt {bench_kkt:.2e}"),
        ),
    ));
    results.push((8, "OCP-scale speedup", c8));

    let mut trivial = Report {
        cases: kernels.cases + riccati.cases,
        checks: kernels.checks.clone(),
    };
    trivial.checks.extend(riccati.checks.iter().cloned());
    results.push((
        9,
        "trivial paths are bitwise exact",
        from_report(&trivial, &["kernel.trivial_bitwise", "riccati.noop_bitwise"], true, String::new()),
    ));

    results.sort_by_key(|r| r.0);
    println!("acceptance (thread pinned: {pinned})");
    let mut all = true;
    for (id, name, o) in &results {
        all &= o.ok;
        println!("{} {id}. {name}: {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
    }
    println!(
        "{} of {} criteria passed",
        results.iter().filter(|r| r.2.ok).count(),
        results.len()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
