//! End-to-end acceptance checks. Every criterion prints one PASS/FAIL line
//! with its runtime; the test fails if any criterion fails.

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use backoff_core::analytic::{
    check_pj_monotone, check_property1, classify_regime, joint_singleton_prob_closed, pj_ratio_direct,
    pj_ratio_expansion, singleton_bounds, BallsBinsParams, Monotonicity, Regime,
};
use backoff_core::ballsbins::{
    enumerate_all_distinct_prob, enumerate_joint_singleton_prob, enumerate_mgf_sides, Enumerator,
};
use backoff_core::harness::{
    concentration_experiment, last_window_experiment, makespan_experiment_with, ExperimentOptions,
    MakespanStats,
};
use backoff_core::intmath::{ceil_lglg, ceil_sqrt, lg};
use backoff_core::protocols::{ProtocolKind, ScheduleSpec, DEFAULT_SLOT_CAP};
use backoff_core::{ExactProbability, RngStream};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn report(id: u32, name: &str, limit: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = run();
    let elapsed = start.elapsed();
    let pass = out.pass && elapsed <= limit;
    let _ = writeln!(
        std::io::stdout().lock(),
        "[{}] {id:>2} {name}: {} ({:.2}s, limit {}s)",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn makespan(kind: ProtocolKind, n: u64, trials: u64, seed: u64) -> MakespanStats {
    let spec = ScheduleSpec::default_for(kind, n).unwrap();
    makespan_experiment_with(&spec, n, trials, seed, DEFAULT_SLOT_CAP, &ExperimentOptions::default()).unwrap()
}

fn property_exact() -> Outcome {
    let mut checked = 0;
    for n in 2..=6u64 {
        for b in n + ceil_sqrt(n)..=9 {
            let params = BallsBinsParams::new(n, b).unwrap();
            let checks = check_property1(params, n).unwrap();
            if let Some(bad) = checks.iter().find(|c| !c.holds) {
                return outcome(false, format!("N={n} B={b}: {bad}"));
            }
            for s in 1..=n {
                let subset: Vec<u64> = (0..s).collect();
                let brute = enumerate_joint_singleton_prob(n, b, &subset, &Enumerator::raw()).unwrap();
                let closed = joint_singleton_prob_closed(params, s).unwrap();
                if brute != closed {
                    return outcome(false, format!("N={n} B={b} s={s}: enumeration {brute} vs closed {closed}"));
                }
                checked += 1;
            }
        }
    }
    let counter = check_property1(BallsBinsParams::new(2, 2).unwrap(), 2).unwrap();
    let line = counter[1].to_string();
    let half = ExactProbability::from_u64s(1, 2);
    let quarter = ExactProbability::from_u64s(1, 4);
    let ok = !counter[1].holds && counter[1].joint == half && counter[1].product == quarter;
    outcome(ok, format!("{checked} (N,B,s) exact matches; counterexample `{line}`"))
}

fn monotone_grid() -> Outcome {
    let mut checked = 0;
    for n in 2..=200u64 {
        for b in 2..=3 * n {
            let params = BallsBinsParams::new(n, b).unwrap();
            if classify_regime(params) == Regime::Gap {
                continue;
            }
            if let Monotonicity::ViolatedAt(j) = check_pj_monotone(params) {
                return outcome(false, format!("N={n} B={b} violated at j={j}"));
            }
            checked += 1;
        }
    }
    outcome(true, format!("{checked} (N,B) pairs monotone"))
}

fn ratio_grid() -> Outcome {
    let mut rng = RngStream::new(2024, 3).generator();
    let (mut points, mut skipped, mut worst) = (0, 0, 0.0f64);
    while points < 10_000 {
        let n = 2 + rng.below(499);
        let b = 2 + rng.below(1499);
        let top = n.min(b) - 2;
        let j = rng.below(top + 1);
        let params = BallsBinsParams::new(n, b).unwrap();
        let (Ok(direct), Ok(expansion)) = (pj_ratio_direct(params, j), pj_ratio_expansion(params, j)) else {
            skipped += 1;
            continue;
        };
        let rel = ((expansion - direct) / direct).abs();
        worst = worst.max(rel);
        if rel.is_nan() || rel > 1e-9 {
            return outcome(false, format!("N={n} B={b} j={j}: direct {direct} expansion {expansion}"));
        }
        points += 1;
    }
    outcome(true, format!("{points} points, worst relative error {worst:.2e}, {skipped} degenerate skipped"))
}

fn mgf_sides() -> Outcome {
    let mut checked = 0;
    for n in 1..=5u64 {
        for b in 2..=16u64 {
            if classify_regime(BallsBinsParams::new(n, b).unwrap()) != Regime::Above {
                continue;
            }
            for lambda in [0.1, 0.5, 1.0, 2.0] {
                let s = enumerate_mgf_sides(n, b, lambda, &Enumerator::default()).unwrap();
                if s.lhs > s.rhs + 1e-12 {
                    return outcome(false, format!("N={n} B={b} lambda={lambda}: {} > {}", s.lhs, s.rhs));
                }
                checked += 1;
            }
        }
    }
    let c = enumerate_mgf_sides(2, 2, 1.0, &Enumerator::default()).unwrap();
    outcome(
        c.lhs > c.rhs,
        format!("{checked} cases hold; N=2 B=2 lambda=1 gives lhs {:.6} > rhs {:.6}", c.lhs, c.rhs),
    )
}

fn concentration() -> Outcome {
    let n = 100_000;
    let b = n + ceil_sqrt(n);
    let big = concentration_experiment(n, b, 0.1, 1000, 11, None).unwrap();
    let (lower, _) = singleton_bounds(BallsBinsParams::new(n, b).unwrap(), 0.1).unwrap();
    let small = concentration_experiment(100, 120, 0.3, 10_000, 12, None).unwrap();
    outcome(
        big.lower_violations == 0 && lower.failure_prob < 1e-50 && small.pass,
        format!(
            "N=1e5: {} lower violations, bound {:.3e}; N=100 B=120: rates {:.4}/{:.4} vs bounds {:.4}/{:.4}",
            big.lower_violations,
            lower.failure_prob,
            small.empirical_violation_rate_lower,
            small.empirical_violation_rate_upper,
            small.bound_lower,
            small.bound_upper
        ),
    )
}

fn last_window() -> Outcome {
    let r = last_window_experiment(100, 20_000, 10_000, 13, None).unwrap();
    let exact = enumerate_all_distinct_prob(2, 5, &Enumerator::raw()).unwrap();
    let expected = ExactProbability::from_u64s(20, 25);
    outcome(
        r.empirical_all_succeed_rate >= 0.5 && exact == expected,
        format!("rate {:.4} >= 0.5; m=2 w=5 exact {exact}", r.empirical_all_succeed_rate),
    )
}

fn fixed_backoff(stats: &MakespanStats) -> Outcome {
    let n = stats.n;
    let budget = u64::from(ceil_lglg(n) + 7);
    let window = n + ceil_sqrt(n);
    let max_windows = *stats.windows_used.iter().max().unwrap();
    let ok = budget == 12
        && !stats.any_truncated()
        && max_windows <= budget
        && stats.max.unwrap() <= budget * window;
    outcome(
        ok,
        format!("max windows {max_windows} <= {budget}; max makespan {} <= {}", stats.max.unwrap(), budget * window),
    )
}

fn binary_exponential() -> Outcome {
    let n = 10_000;
    let stats = makespan(ProtocolKind::Beb, n, 100, 2);
    let after = stats.verdicts.iter().find(|v| v.name == "windows_from_alignment").unwrap();
    let bound = 512.0 * n as f64 * lg(n as f64);
    let max = stats.max.unwrap() as f64;
    let ok = !stats.any_truncated() && after.bound == f64::from(ceil_lglg(n) + 7) && after.pass && max <= bound;
    outcome(
        ok,
        format!("windows from alignment {} <= {}; max makespan {max} <= {bound:.0}", after.observed, after.bound),
    )
}

fn flat_constant(name: &str, ratios: &[(u64, f64)], constant: f64) -> Outcome {
    let max = ratios.iter().map(|r| r.1).fold(f64::MIN, f64::max);
    let min = ratios.iter().map(|r| r.1).fold(f64::MAX, f64::min);
    let listed: Vec<String> = ratios.iter().map(|(n, r)| format!("n={n}: {r:.3}")).collect();
    outcome(
        max <= constant && max / min <= 4.0,
        format!("{name} {} <= {constant:.3}; max/min {:.3}", listed.join(", "), max / min),
    )
}

fn audit_envelope(runs: &[&MakespanStats]) -> Outcome {
    let mut checks = 0;
    let mut worst = 0.0f64;
    for stats in runs {
        for t in stats.audit.iter().filter(|t| t.case.is_recursion_claim()) {
            checks += t.checks;
            worst = worst.max(t.violation_rate() / t.envelope);
            if t.violation_rate() > 10.0 * t.envelope {
                return outcome(false, format!("n={} {:?}", stats.n, t));
            }
        }
    }
    let tallies: usize = runs.iter().map(|s| s.audit.iter().filter(|t| t.case.is_recursion_claim()).count()).sum();
    outcome(
        checks > 0 && tallies > 0,
        format!("{checks} audited windows over {tallies} (case, window) cells; worst rate/envelope {worst}"),
    )
}

fn determinism() -> Outcome {
    let commands: [&[&str]; 3] = [
        &["experiment", "makespan", "--protocol", "stb", "--n", "4096", "--trials", "20", "--seed", "9"],
        &["experiment", "concentration", "--n", "1000", "--b", "1100", "--eps", "0.2", "--trials", "2000", "--seed", "9"],
        &["experiment", "lastwindow", "--m", "50", "--w", "5000", "--trials", "2000", "--seed", "9"],
    ];
    for args in commands {
        let outputs: Vec<Vec<u8>> = ["1", "2", "4", "8"]
            .iter()
            .map(|w| {
                Command::new(env!("CARGO_BIN_EXE_backoff"))
                    .args(args)
                    .args(["--workers", w, "--format", "json"])
                    .output()
                    .unwrap()
                    .stdout
            })
            .collect();
        if outputs[0].is_empty() || outputs.iter().any(|o| *o != outputs[0]) {
            return outcome(false, format!("{} differs across worker counts", args[1]));
        }
    }
    outcome(true, "makespan, concentration, lastwindow JSON byte-identical for 1, 2, 4, 8 workers")
}

#[test]
#[allow(clippy::vec_init_then_push)]
fn acceptance() {
    let secs = Duration::from_secs;
    let mut results = Vec::new();
    results.push(report(1, "property1 exact", secs(5), property_exact));
    results.push(report(2, "conditional probability monotone", secs(30), monotone_grid));
    results.push(report(3, "ratio expansion", secs(30), ratio_grid));
    results.push(report(4, "mgf product inequality", secs(10), mgf_sides));
    results.push(report(5, "singleton concentration", secs(60), concentration));
    results.push(report(6, "last window all clear", secs(10), last_window));

    let mut fb = None;
    results.push(report(7, "fixed backoff windows", secs(60), || {
        let stats = makespan(ProtocolKind::Fb, 100_000, 100, 1);
        let out = fixed_backoff(&stats);
        fb = Some(stats);
        out
    }));
    results.push(report(8, "binary exponential backoff", secs(60), binary_exponential));

    let cal = backoff_core::harness::Calibration::bundled().unwrap();
    let mut stb_runs = Vec::new();
    results.push(report(9, "sawtooth linear makespan", secs(300), || {
        let mut ratios = Vec::new();
        for exp in [10, 12, 14, 16] {
            let n = 1u64 << exp;
            let stats = makespan(ProtocolKind::Stb, n, 50, 3);
            ratios.push((n, stats.mean.unwrap() / n as f64));
            stb_runs.push(stats);
        }
        flat_constant("mean/n", &ratios, cal.c_stb)
    }));
    results.push(report(10, "log-log backoff makespan", secs(300), || {
        let mut ratios = Vec::new();
        for exp in [12, 14, 16] {
            let n = 1u64 << exp;
            let nf = n as f64;
            let scale = nf * lg(lg(nf)) / lg(lg(lg(nf)));
            let stats = makespan(ProtocolKind::Llb, n, 50, 4);
            ratios.push((n, stats.mean.unwrap() / scale));
        }
        flat_constant("mean/(n lglg n/lglglg n)", &ratios, cal.c_llb)
    }));
    results.push(report(11, "recursion audit envelope", secs(60), || {
        let mut runs: Vec<&MakespanStats> = stb_runs.iter().collect();
        runs.extend(fb.as_ref());
        if runs.len() != 5 {
            return outcome(false, "criterion 7 or 9 did not produce runs");
        }
        audit_envelope(&runs)
    }));
    results.push(report(12, "determinism across workers", secs(10), determinism));

    let passed = results.iter().filter(|&&p| p).count();
    let _ = writeln!(std::io::stdout().lock(), "acceptance: {passed}/{} criteria passed", results.len());
    assert_eq!(passed, results.len());
}

#[test]
fn tally_envelope_matches_window_index() {
    // The envelope grows linearly with the aligned window index.
    let stats = makespan(ProtocolKind::Fb, 20_000, 4, 6);
    for t in &stats.audit {
        let expected = (t.i + 1) as f64 / (20_000f64 * 20_000f64);
        assert!((t.envelope - expected).abs() < 1e-20);
    }
}
