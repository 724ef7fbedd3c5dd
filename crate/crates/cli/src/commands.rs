use std::fmt::Write as _;

use backoff_core::analytic::{
    check_pj_monotone, check_property1, chernoff_lower_tail, chernoff_upper_tail, classify_regime,
    cond_prob_pj, cond_prob_pj_exact, expected_singletons, joint_singleton_prob_closed,
    last_window_bound, all_distinct_prob_closed, pj_ratio_direct, pj_ratio_expansion, singleton_bounds,
    BallsBinsParams, Monotonicity,
};
use backoff_core::ballsbins::{enumerate_mgf_sides, simulate_singletons, Enumerator, SimulationOptions};
use backoff_core::harness::{
    calibrate, concentration_experiment, last_window_experiment, makespan_experiment_with,
    recursion_audit, AuditConfig, BoundConfig, ExperimentOptions, Verdict,
};
use backoff_core::protocols::{parse_schedule, run_protocol, ProtocolKind, ScheduleSpec, DEFAULT_SLOT_CAP};
use backoff_core::{Error, Result, RngStream};
use serde_json::{json, Value};

use crate::args::{Analytic, BallsBins, Command, Experiment, Protocol, ProtocolArgs, Simulate};
use crate::output::{real, Report};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_VERDICT: u8 = 1;
pub const EXIT_TRUNCATED: u8 = 3;

pub fn run(command: &Command, workers: Option<usize>) -> Result<(Report, u8)> {
    match command {
        Command::Analytic(a) => analytic(a).map(|r| (r, EXIT_PASS)),
        Command::Simulate(s) => simulate(s),
        Command::Experiment(e) => experiment(e, workers),
    }
}

fn params(p: &BallsBins) -> Result<BallsBinsParams> {
    BallsBinsParams::new(p.n, p.b)
}

fn to_json<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("report types serialize")
}

fn analytic(cmd: &Analytic) -> Result<Report> {
    Ok(match cmd {
        Analytic::Pj { params: p, j, exact } => {
            let value = cond_prob_pj(params(p)?, *j)?;
            let mut pairs = vec![("pj", real(value))];
            let mut json = json!({ "n": p.n, "b": p.b, "j": j, "pj": value });
            if *exact {
                let q = cond_prob_pj_exact(params(p)?, *j)?.to_string();
                json["exact"] = q.clone().into();
                pairs.push(("exact", q));
            }
            if *exact {
                Report::pairs(json, &pairs)
            } else {
                Report { table: format!("{}\n", real(value)), csv: format!("pj\n{}\n", real(value)), json }
            }
        }
        Analytic::Ratio { params: p, j } => {
            let bb = params(p)?;
            let direct = pj_ratio_direct(bb, *j)?;
            let expansion = pj_ratio_expansion(bb, *j)?;
            let rel = ((direct - expansion) / direct).abs();
            Report::pairs(
                json!({ "n": p.n, "b": p.b, "j": j, "direct": direct, "expansion": expansion, "relative_difference": rel }),
                &[("direct", real(direct)), ("expansion", real(expansion)), ("relative_difference", real(rel))],
            )
        }
        Analytic::Expected { params: p } => {
            let e = expected_singletons(params(p)?);
            Report {
                json: json!({ "n": p.n, "b": p.b, "expected_singletons": e }),
                table: format!("{}\n", real(e)),
                csv: format!("expected_singletons\n{}\n", real(e)),
            }
        }
        Analytic::Bounds { params: p, eps } => {
            let (lower, upper) = singleton_bounds(params(p)?, *eps)?;
            Report::pairs(
                json!({ "n": p.n, "b": p.b, "lower": to_json(&lower), "upper": to_json(&upper) }),
                &[
                    ("lower_threshold", real(lower.threshold)),
                    ("lower_failure_prob", real(lower.failure_prob)),
                    ("upper_threshold", real(upper.threshold)),
                    ("upper_failure_prob", real(upper.failure_prob)),
                ],
            )
        }
        Analytic::Property1 { params: p, max_s } => {
            let checks = check_property1(params(p)?, *max_s)?;
            let mut table = String::new();
            let mut csv = String::from("s,joint,product,holds\n");
            for c in &checks {
                let _ = writeln!(table, "{c}");
                let _ = writeln!(csv, "{},{},{},{}", c.s, c.joint, c.product, c.holds);
            }
            Report {
                json: json!({ "n": p.n, "b": p.b, "checks": to_json(&checks) }),
                table,
                csv,
            }
        }
        Analytic::Regime { params: p } => {
            let r = classify_regime(params(p)?);
            Report {
                json: json!({ "n": p.n, "b": p.b, "regime": to_json(&r) }),
                table: format!("{r}\n"),
                csv: format!("regime\n{r}\n"),
            }
        }
        Analytic::Joint { params: p, s } => {
            let q = joint_singleton_prob_closed(params(p)?, *s)?;
            Report {
                json: json!({ "n": p.n, "b": p.b, "s": s, "joint": q.to_string(), "value": q.to_f64() }),
                table: format!("{q}\n"),
                csv: format!("joint\n{q}\n"),
            }
        }
        Analytic::Chernoff { eps, mean } => {
            let upper = chernoff_upper_tail(*eps, *mean)?;
            let lower = chernoff_lower_tail(*eps, *mean)?;
            Report::pairs(
                json!({ "epsilon": eps, "mean": mean, "upper_tail": upper, "lower_tail": lower }),
                &[("upper_tail", real(upper)), ("lower_tail", real(lower))],
            )
        }
        Analytic::Monotone { params: p } => {
            let (text, at) = match check_pj_monotone(params(p)?) {
                Monotonicity::Monotone => ("monotone".to_string(), Value::Null),
                Monotonicity::ViolatedAt(j) => (format!("violated_at {j}"), j.into()),
            };
            Report {
                json: json!({ "n": p.n, "b": p.b, "monotone": at.is_null(), "violated_at": at }),
                table: format!("{text}\n"),
                csv: format!("result\n{text}\n"),
            }
        }
        Analytic::Mgf { params: p, lambda, cap } => {
            let mut en = Enumerator::default();
            if let Some(cap) = cap {
                en = en.with_cap(*cap);
            }
            let sides = enumerate_mgf_sides(p.n, p.b, *lambda, &en)?;
            Report::pairs(
                json!({ "n": p.n, "b": p.b, "lambda": lambda, "lhs": sides.lhs, "rhs": sides.rhs, "lhs_le_rhs": sides.lhs <= sides.rhs }),
                &[("lhs", real(sides.lhs)), ("rhs", real(sides.rhs))],
            )
        }
        Analytic::Lastwindow { m, w, exact } => {
            let bound = last_window_bound(*m, *w)?;
            let mut json = json!({ "m": m, "w": w, "bound": bound });
            let mut pairs = vec![("bound", real(bound))];
            if *exact {
                let q = all_distinct_prob_closed(*m, *w)?.to_string();
                json["exact"] = q.clone().into();
                pairs.push(("exact", q));
            }
            Report::pairs(json, &pairs)
        }
    })
}

fn schedule_spec(p: &ProtocolArgs) -> Result<ScheduleSpec> {
    let kind = match p.protocol {
        Protocol::Fb => ProtocolKind::Fb,
        Protocol::Beb => ProtocolKind::Beb,
        Protocol::Llb => ProtocolKind::Llb,
        Protocol::Stb => ProtocolKind::Stb,
        Protocol::Custom => ProtocolKind::Custom,
    };
    let mismatch = |flag: &str| Err(Error::InvalidParameter {
        name: "protocol",
        constraint: format!("--{flag} does not apply to {kind}"),
    });
    if (p.window.is_some() || p.fb_multiplier.is_some()) && kind != ProtocolKind::Fb {
        return mismatch("window");
    }
    if p.initial.is_some() && !matches!(kind, ProtocolKind::Llb | ProtocolKind::Stb) {
        return mismatch("initial");
    }
    if p.schedule.is_some() != (kind == ProtocolKind::Custom) {
        return Err(Error::InvalidParameter {
            name: "schedule",
            constraint: "--schedule is required for custom and only valid for custom".into(),
        });
    }
    Ok(match kind {
        ProtocolKind::Fb => match (p.window, p.fb_multiplier) {
            (Some(window), _) => ScheduleSpec::Fb { window },
            (None, Some(mult)) => {
                if !(mult.is_finite() && mult > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "fb_multiplier",
                        constraint: "must be finite and > 0".into(),
                    });
                }
                ScheduleSpec::Fb { window: ((mult * p.n as f64).ceil() as u64).max(1) }
            }
            (None, None) => ScheduleSpec::default_for(kind, p.n)?,
        },
        ProtocolKind::Llb => ScheduleSpec::Llb { initial: p.initial.unwrap_or(2) },
        ProtocolKind::Stb => ScheduleSpec::Stb { initial_outer: p.initial.unwrap_or(2) },
        ProtocolKind::Beb => ScheduleSpec::Beb,
        ProtocolKind::Custom => {
            let path = p.schedule.as_ref().expect("checked above");
            parse_schedule(&std::fs::read_to_string(path)?)?
        }
    })
}

fn simulate(cmd: &Simulate) -> Result<(Report, u8)> {
    match cmd {
        Simulate::Singletons { params: p, trials, seed, keep_counts } => {
            let opts = SimulationOptions { keep_counts: *keep_counts, ..Default::default() };
            let stats = simulate_singletons(p.n, p.b, *trials, *seed, &opts)?;
            let expected = expected_singletons(params(p)?);
            let mut json = to_json(&stats);
            json["n"] = p.n.into();
            json["b"] = p.b.into();
            json["seed"] = (*seed).into();
            json["expected"] = expected.into();
            let mut csv = String::from("trial_index,singletons\n");
            for (t, c) in stats.counts.iter().flatten().enumerate() {
                let _ = writeln!(csv, "{t},{c}");
            }
            let mut report = Report::pairs(
                json,
                &[
                    ("trials", stats.trials.to_string()),
                    ("mean", real(stats.mean)),
                    ("min", stats.min.to_string()),
                    ("max", stats.max.to_string()),
                    ("expected", real(expected)),
                ],
            );
            if *keep_counts {
                report.csv = csv;
            }
            Ok((report, EXIT_PASS))
        }
        Simulate::Trace { protocol, seed, trial } => {
            let spec = schedule_spec(protocol)?;
            let cap = protocol.slot_cap.unwrap_or(DEFAULT_SLOT_CAP);
            let trace = run_protocol(protocol.n, spec.schedule()?, &RngStream::new(*seed, *trial), cap)?;
            let mut csv = String::from("window_index,window_size,packets_at_start,successes,slots_elapsed_total\n");
            let mut table = format!(
                "{} n={} seed={} windows={} makespan={} truncated={}\n",
                spec.kind(),
                protocol.n,
                seed,
                trace.records.len(),
                trace.makespan_slots.map_or("-".into(), |m| m.to_string()),
                trace.truncated
            );
            for r in &trace.records {
                let row = format!(
                    "{},{},{},{},{}",
                    r.window_index, r.window_size, r.packets_at_start, r.successes, r.slots_elapsed_total
                );
                let _ = writeln!(csv, "{row}");
                let _ = writeln!(table, "{}", row.replace(',', "\t"));
            }
            let mut json = to_json(&trace);
            json["protocol"] = to_json(&spec.kind());
            json["params"] = to_json(&spec);
            json["seed"] = (*seed).into();
            json["trial"] = (*trial).into();
            json["slot_cap"] = cap.into();
            let code = if trace.truncated { EXIT_TRUNCATED } else { EXIT_PASS };
            Ok((Report { json, table, csv }, code))
        }
    }
}

fn verdict_table(verdicts: &[Verdict]) -> String {
    let mut out = String::new();
    for v in verdicts {
        let pass = if v.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{} observed {} bound {} {pass}", v.name, real(v.observed), real(v.bound));
    }
    out
}

fn verdict_code(verdicts: &[Verdict]) -> u8 {
    if verdicts.iter().all(|v| v.pass) {
        EXIT_PASS
    } else {
        EXIT_VERDICT
    }
}

fn experiment(cmd: &Experiment, workers: Option<usize>) -> Result<(Report, u8)> {
    match cmd {
        Experiment::Makespan { protocol, trials, seed, bounds } => {
            let spec = schedule_spec(protocol)?;
            let mut config = BoundConfig::default();
            config.beb_linear_c = bounds.beb_c.unwrap_or(config.beb_linear_c);
            config.c_stb = bounds.c_stb.unwrap_or(config.c_stb);
            config.c_llb = bounds.c_llb.unwrap_or(config.c_llb);
            config.case2_k = bounds.case2_k.unwrap_or(config.case2_k);
            let opts = ExperimentOptions { workers, bounds: config };
            let cap = protocol.slot_cap.unwrap_or(DEFAULT_SLOT_CAP);
            let stats = makespan_experiment_with(&spec, protocol.n, *trials, *seed, cap, &opts)?;
            let summary = match (stats.mean, stats.min, stats.max) {
                (Some(mean), Some(min), Some(max)) => {
                    format!("makespan mean {} min {min} max {max}\n", real(mean))
                }
                _ => "makespan none finished\n".to_string(),
            };
            let table = format!(
                "{} n={} trials={} seed={}\n{summary}{}",
                stats.protocol,
                stats.n,
                stats.trials,
                stats.seed,
                verdict_table(&stats.verdicts)
            );
            let code = if stats.any_truncated() { EXIT_TRUNCATED } else { verdict_code(&stats.verdicts) };
            Ok((Report { json: to_json(&stats), csv: stats.to_csv(), table }, code))
        }
        Experiment::Concentration { params: p, eps, trials, seed } => {
            let r = concentration_experiment(p.n, p.b, *eps, *trials, *seed, workers)?;
            let mut report = Report::pairs(
                to_json(&r),
                &[
                    ("empirical_violation_rate_lower", real(r.empirical_violation_rate_lower)),
                    ("bound_lower", real(r.bound_lower)),
                    ("empirical_violation_rate_upper", real(r.empirical_violation_rate_upper)),
                    ("bound_upper", real(r.bound_upper)),
                ],
            );
            report.table.push_str(&verdict_table(&r.verdicts));
            Ok((report, verdict_code(&r.verdicts)))
        }
        Experiment::Lastwindow { m, w, trials, seed } => {
            let r = last_window_experiment(*m, *w, *trials, *seed, workers)?;
            let mut report = Report::pairs(
                to_json(&r),
                &[("empirical_all_succeed_rate", real(r.empirical_all_succeed_rate)), ("bound", real(r.bound))],
            );
            report.table.push_str(&verdict_table(&r.verdicts));
            Ok((report, verdict_code(&r.verdicts)))
        }
        Experiment::Audit { protocol, seed, trial, case2_k } => {
            let spec = schedule_spec(protocol)?;
            let cap = protocol.slot_cap.unwrap_or(DEFAULT_SLOT_CAP);
            let trace = run_protocol(protocol.n, spec.schedule()?, &RngStream::new(*seed, *trial), cap)?;
            let config = AuditConfig { case2_k: case2_k.unwrap_or(AuditConfig::default().case2_k) };
            let truncated_code = if trace.truncated { EXIT_TRUNCATED } else { EXIT_PASS };
            match recursion_audit(&trace, spec.kind(), protocol.n, &config) {
                Ok(audit) => {
                    let mut csv = String::from("i,window_index,m_i,w_i,m_next,case,predicted_cap,observed,pass\n");
                    let mut table = String::new();
                    for e in &audit.entries {
                        let case = to_json(&e.case);
                        let case = case.as_str().unwrap_or_default();
                        let cap = e.predicted_cap.map(real).unwrap_or_default();
                        let _ = writeln!(
                            csv,
                            "{},{},{},{},{},{case},{cap},{},{}",
                            e.i, e.window_index, e.m_i, e.w_i, e.m_next, real(e.observed), e.pass
                        );
                        let _ = writeln!(
                            table,
                            "i={} w={} m={} next={} {case} cap={} {}",
                            e.i,
                            e.w_i,
                            e.m_i,
                            e.m_next,
                            if cap.is_empty() { "-" } else { &cap },
                            if e.pass { "PASS" } else { "FAIL" }
                        );
                    }
                    let code = if trace.truncated {
                        EXIT_TRUNCATED
                    } else if audit.violations().next().is_some() {
                        EXIT_VERDICT
                    } else {
                        EXIT_PASS
                    };
                    Ok((Report { json: to_json(&audit), table, csv }, code))
                }
                Err(Error::AuditNotApplicable(reason)) => Ok((
                    Report::pairs(
                        json!({ "not_applicable": true, "reason": reason }),
                        &[("not_applicable", reason.clone())],
                    ),
                    truncated_code,
                )),
                Err(e) => Err(e),
            }
        }
        Experiment::Calibrate { n, trials, seed, headroom } => {
            let cal = calibrate(*n, *trials, *seed, *headroom, workers)?;
            Ok((
                Report::pairs(
                    to_json(&cal),
                    &[
                        ("stb_mean_per_n", real(cal.stb_mean_per_n)),
                        ("llb_mean_ratio", real(cal.llb_mean_ratio)),
                        ("c_stb", real(cal.c_stb)),
                        ("c_llb", real(cal.c_llb)),
                    ],
                ),
                EXIT_PASS,
            ))
        }
    }
}
