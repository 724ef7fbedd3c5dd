use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intmath::{at_least_plus_sqrt, ceil_lglg, lg};
use crate::protocols::{run_protocol, ProtocolKind, ScheduleSpec};
use crate::rng::RngStream;

use super::audit::{aligned_start, recursion_audit, AuditConfig, AuditTally, RecursionAudit};
use super::calibration::Calibration;
use super::trials::run_trials;
use super::Verdict;

/// Constants used by the makespan verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    /// `c` in `512 n lg n + c n` for BEB.
    pub beb_linear_c: f64,
    /// Mean STB makespan per packet must stay below this.
    pub c_stb: f64,
    /// Mean LLB makespan over `n lg lg n / lg lg lg n` must stay below this.
    pub c_llb: f64,
    /// `K` in the small-remnant audit `m_{i+1} <= K n^0.4`.
    pub case2_k: f64,
}

impl BoundConfig {
    pub fn from_calibration(cal: &Calibration) -> Self {
        BoundConfig {
            beb_linear_c: 8.0,
            c_stb: cal.c_stb,
            c_llb: cal.c_llb,
            case2_k: AuditConfig::default().case2_k,
        }
    }
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self::from_calibration(&Calibration::bundled().expect("bundled calibration parses"))
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOptions {
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    pub bounds: BoundConfig,
}

/// Makespan statistics and verdicts over independent trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MakespanStats {
    pub protocol: ProtocolKind,
    pub params: ScheduleSpec,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub slot_cap: u64,
    /// `null` for truncated trials.
    pub makespans: Vec<Option<u64>>,
    pub windows_used: Vec<u64>,
    pub truncated: Vec<bool>,
    /// Over finished trials only.
    pub mean: Option<f64>,
    pub min: Option<u64>,
    pub max: Option<u64>,
    pub verdicts: Vec<Verdict>,
    /// Per-(case, window) audit counts over all trials.
    pub audit: Vec<AuditTally>,
    /// Trials whose trace never reached the alignment window size.
    pub audit_not_applicable: u64,
}

impl MakespanStats {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn any_truncated(&self) -> bool {
        self.truncated.iter().any(|&t| t)
    }

    /// One row per trial: `trial_index,makespan_slots,windows_used,truncated`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial_index,makespan_slots,windows_used,truncated\n");
        for t in 0..self.makespans.len() {
            let makespan = self.makespans[t].map(|m| m.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{t},{makespan},{},{}", self.windows_used[t], self.truncated[t]);
        }
        out
    }
}

struct TrialSummary {
    makespan: Option<u64>,
    windows: u64,
    truncated: bool,
    windows_from_alignment: u64,
    audit: Option<RecursionAudit>,
}

/// `n lg lg n / lg lg lg n`, defined for `n > 4`.
pub(crate) fn llb_scale(n: u64) -> Option<f64> {
    if n <= 4 {
        return None;
    }
    let lglg = lg(lg(n as f64));
    Some(n as f64 * lglg / lg(lglg))
}

/// Runs the default schedule of `kind` with default options.
pub fn makespan_experiment(
    kind: ProtocolKind,
    n: u64,
    trials: u64,
    seed: u64,
    slot_cap: u64,
) -> Result<MakespanStats> {
    let spec = ScheduleSpec::default_for(kind, n)?;
    makespan_experiment_with(&spec, n, trials, seed, slot_cap, &ExperimentOptions::default())
}

pub fn makespan_experiment_with(
    spec: &ScheduleSpec,
    n: u64,
    trials: u64,
    seed: u64,
    slot_cap: u64,
    options: &ExperimentOptions,
) -> Result<MakespanStats> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    spec.validate()?;
    let kind = spec.kind();
    let audit_config = AuditConfig {
        case2_k: options.bounds.case2_k,
    };
    let summaries = run_trials(trials, options.workers, |t| -> Result<TrialSummary> {
        let trace = run_protocol(n, spec.schedule()?, &RngStream::new(seed, t), slot_cap)?;
        let windows_from_alignment = aligned_start(&trace, kind, n)
            .map_or(0, |s| (trace.records.len() - s) as u64);
        let audit = recursion_audit(&trace, kind, n, &audit_config).ok();
        Ok(TrialSummary {
            makespan: trace.makespan_slots,
            windows: trace.records.len() as u64,
            truncated: trace.truncated,
            windows_from_alignment,
            audit,
        })
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let makespans: Vec<Option<u64>> = summaries.iter().map(|s| s.makespan).collect();
    let finished: Vec<u64> = makespans.iter().flatten().copied().collect();
    let mean = (!finished.is_empty())
        .then(|| finished.iter().map(|&m| m as f64).sum::<f64>() / finished.len() as f64);
    let min = finished.iter().min().copied();
    let max = finished.iter().max().copied();
    let max_windows = summaries.iter().map(|s| s.windows).max().unwrap_or(0);
    let truncated_count = summaries.iter().filter(|s| s.truncated).count();

    let audits: Vec<&RecursionAudit> = summaries.iter().filter_map(|s| s.audit.as_ref()).collect();
    let audit = AuditTally::collect(n, audits.iter().copied());
    let audit_not_applicable = (summaries.len() - audits.len()) as u64;

    let nf = n as f64;
    let window_budget = f64::from(ceil_lglg(n) + 7);
    let mut verdicts = Vec::new();
    match spec {
        ScheduleSpec::Fb { window } if at_least_plus_sqrt(*window, n) => {
            verdicts.push(Verdict::at_most("windows_used", window_budget, max_windows as f64));
            if let Some(max) = max {
                verdicts.push(Verdict::at_most(
                    "makespan_slots",
                    window_budget * *window as f64,
                    max as f64,
                ));
            }
        }
        ScheduleSpec::Beb => {
            if let Some(max) = max {
                let bound = 512.0 * nf * lg(nf) + options.bounds.beb_linear_c * nf;
                verdicts.push(Verdict::at_most("makespan_slots", bound, max as f64));
            }
            let after = summaries.iter().map(|s| s.windows_from_alignment).max().unwrap_or(0);
            verdicts.push(Verdict::at_most("windows_from_alignment", window_budget, after as f64));
        }
        ScheduleSpec::Stb { .. } => {
            if let Some(mean) = mean {
                verdicts.push(Verdict::at_most("mean_makespan_per_n", options.bounds.c_stb, mean / nf));
            }
        }
        ScheduleSpec::Llb { .. } => {
            if let (Some(mean), Some(scale)) = (mean, llb_scale(n)) {
                verdicts.push(Verdict::at_most("mean_makespan_ratio", options.bounds.c_llb, mean / scale));
            }
        }
        _ => {}
    }
    let worst = audit
        .iter()
        .filter(|t| t.case.is_recursion_claim())
        .map(|t| t.violation_rate() / t.envelope)
        .fold(0.0, f64::max);
    verdicts.push(Verdict::at_most("recursion_audit_envelope", 10.0, worst));
    verdicts.push(Verdict::at_most("truncated_trials", 0.0, truncated_count as f64));

    Ok(MakespanStats {
        protocol: kind,
        params: spec.clone(),
        n,
        trials,
        seed,
        slot_cap,
        makespans,
        windows_used: summaries.iter().map(|s| s.windows).collect(),
        truncated: summaries.iter().map(|s| s.truncated).collect(),
        mean,
        min,
        max,
        verdicts,
        audit,
        audit_not_applicable,
    })
}
