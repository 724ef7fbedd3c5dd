use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intmath::at_least_plus_sqrt;
use crate::protocols::{ProtocolKind, ProtocolTrace};

/// Which inequality a window was checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditCase {
    /// `m_{i+1} <= 0.8 m_0 0.8^(2^i)` for monotone schedules.
    DoublyExponentialDecay,
    /// The same cap divided by `2^i`, for halving runs.
    RunDecay,
    /// `m_{i+1} < 1.25 m_i^2 / n` once `w_i >= n + sqrt(n)` and `m_i >= n^0.7`.
    QuadraticShrink,
    /// `m_{i+1} <= K n^0.4` once `w_i >= n + sqrt(n)` and `n^0.4 <= m_i < n^0.7`.
    SmallRemnant,
    /// `m_1 <= n/3` after the first window of size at least `4n`.
    RunStartThird,
    /// At most 6 windows are played once fewer than `n^0.7` packets remain.
    FinishWithin,
    /// `w_i > 2 m_i`: everyone succeeds with probability at least `1 - m_i^2/w_i`.
    AllClear,
    /// No inequality applies to this window.
    None,
}

impl AuditCase {
    /// Cases whose failure probability is at most `(i+1)/n^2` per window.
    pub fn is_recursion_claim(self) -> bool {
        matches!(
            self,
            AuditCase::DoublyExponentialDecay
                | AuditCase::RunDecay
                | AuditCase::QuadraticShrink
                | AuditCase::SmallRemnant
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    /// Constant in the `m_{i+1} <= K n^0.4` check.
    pub case2_k: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig { case2_k: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    /// Window index counted from the aligned window 0.
    pub i: u64,
    pub window_index: u64,
    pub m_i: u64,
    pub w_i: u64,
    pub m_next: u64,
    pub case: AuditCase,
    pub predicted_cap: Option<f64>,
    /// Quantity compared with the cap: `m_next`, or a window count for
    /// [`AuditCase::FinishWithin`].
    pub observed: f64,
    /// `1 - m_i^2 / w_i` for [`AuditCase::AllClear`] entries.
    pub all_clear_prob: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionAudit {
    pub n: u64,
    pub protocol: ProtocolKind,
    /// Index into the trace of the aligned window 0.
    pub aligned_start: u64,
    pub entries: Vec<AuditEntry>,
}

impl RecursionAudit {
    /// Failed checks. A window that did not clear every packet is not a
    /// violation, since that outcome has positive probability.
    pub fn violations(&self) -> impl Iterator<Item = &AuditEntry> {
        self.entries
            .iter()
            .filter(|e| !e.pass && e.case != AuditCase::AllClear)
    }
}

/// Window where packets start to succeed in large numbers: the first window
/// for FB, the first of size at least `4n` for STB, otherwise the first of
/// size at least `n + sqrt(n)`.
pub fn aligned_start(trace: &ProtocolTrace, kind: ProtocolKind, n: u64) -> Option<usize> {
    match kind {
        ProtocolKind::Fb => (!trace.records.is_empty()).then_some(0),
        ProtocolKind::Stb => trace
            .records
            .iter()
            .position(|r| u128::from(r.window_size) >= 4 * u128::from(n)),
        _ => trace
            .records
            .iter()
            .position(|r| at_least_plus_sqrt(r.window_size, n)),
    }
}

/// Checks every window of `trace` from the aligned window 0 on against the
/// inequalities whose preconditions hold there.
pub fn recursion_audit(
    trace: &ProtocolTrace,
    kind: ProtocolKind,
    n: u64,
    config: &AuditConfig,
) -> Result<RecursionAudit> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    let start = aligned_start(trace, kind, n).ok_or_else(|| {
        Error::AuditNotApplicable(format!(
            "no window of the {kind} trace reaches the alignment size for n = {n}"
        ))
    })?;
    let records = &trace.records[start..];
    let nf = n as f64;
    let big_threshold = nf.powf(0.7);
    let small_threshold = nf.powf(0.4);
    let m0 = records[0].packets_at_start;
    let mut decay_ok = true;
    let mut run_ok = true;
    let mut finish_checked = false;
    let mut entries = Vec::new();

    for (i, r) in records.iter().enumerate() {
        let (m, w) = (r.packets_at_start, r.window_size);
        let next = m - r.successes;
        let mf = m as f64;
        let large_window = at_least_plus_sqrt(w, n);
        decay_ok &= at_least_plus_sqrt(w, m0);
        run_ok &= at_least_plus_sqrt(w, m) && (i >= 64 || (u128::from(w) << i) >= 4 * u128::from(n));
        let before = entries.len();
        let mut push = |case, cap: f64, observed: f64, pass: bool, all_clear_prob| {
            entries.push(AuditEntry {
                i: i as u64,
                window_index: r.window_index,
                m_i: m,
                w_i: w,
                m_next: next,
                case,
                predicted_cap: Some(cap),
                observed,
                all_clear_prob,
                pass,
            })
        };

        if mf >= big_threshold {
            let decay = 0.8 * m0 as f64 * 0.8f64.powf(2f64.powi(i as i32));
            if kind == ProtocolKind::Stb {
                if run_ok {
                    let cap = decay / 2f64.powi(i as i32);
                    push(AuditCase::RunDecay, cap, next as f64, next as f64 <= cap, None);
                }
            } else if decay_ok {
                push(AuditCase::DoublyExponentialDecay, decay, next as f64, next as f64 <= decay, None);
            }
            if large_window {
                let cap = 1.25 * mf * mf / nf;
                push(AuditCase::QuadraticShrink, cap, next as f64, (next as f64) < cap, None);
            }
        } else if mf >= small_threshold && large_window {
            let cap = config.case2_k * small_threshold;
            push(AuditCase::SmallRemnant, cap, next as f64, next as f64 <= cap, None);
        }

        if kind == ProtocolKind::Stb && i == 0 {
            let cap = nf / 3.0;
            push(AuditCase::RunStartThird, cap, next as f64, next as f64 <= cap, None);
        }

        if kind.is_monotone() && !finish_checked && m > 0 && mf < big_threshold && large_window {
            finish_checked = true;
            let played = (records.len() - i) as f64;
            push(AuditCase::FinishWithin, 6.0, played, !trace.truncated && played <= 6.0, None);
        }

        if m > 0 && u128::from(w) > 2 * u128::from(m) {
            let prob = 1.0 - mf * mf / w as f64;
            push(AuditCase::AllClear, 0.0, next as f64, next == 0, Some(prob));
        }

        if entries.len() == before {
            entries.push(AuditEntry {
                i: i as u64,
                window_index: r.window_index,
                m_i: m,
                w_i: w,
                m_next: next,
                case: AuditCase::None,
                predicted_cap: None,
                observed: next as f64,
                all_clear_prob: None,
                pass: true,
            });
        }
    }

    Ok(RecursionAudit {
        n,
        protocol: kind,
        aligned_start: start as u64,
        entries,
    })
}

/// Per-(case, window) check and violation counts across many audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditTally {
    pub case: AuditCase,
    pub i: u64,
    pub checks: u64,
    /// Failed checks; for [`AuditCase::AllClear`], windows that left packets behind.
    pub violations: u64,
    /// `(i+1)/n^2`, the per-window failure envelope.
    pub envelope: f64,
}

impl AuditTally {
    pub fn violation_rate(&self) -> f64 {
        self.violations as f64 / self.checks as f64
    }

    /// Tallies every non-[`AuditCase::None`] entry.
    pub fn collect<'a>(n: u64, audits: impl IntoIterator<Item = &'a RecursionAudit>) -> Vec<AuditTally> {
        let mut map: BTreeMap<(AuditCase, u64), (u64, u64)> = BTreeMap::new();
        for audit in audits {
            for e in audit.entries.iter().filter(|e| e.case != AuditCase::None) {
                let slot = map.entry((e.case, e.i)).or_default();
                slot.0 += 1;
                slot.1 += u64::from(!e.pass);
            }
        }
        let n2 = (n as f64) * (n as f64);
        map.into_iter()
            .map(|((case, i), (checks, violations))| AuditTally {
                case,
                i,
                checks,
                violations,
                envelope: (i + 1) as f64 / n2,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{run_protocol, ScheduleSpec, WindowRecord, DEFAULT_SLOT_CAP};
    use crate::rng::RngStream;

    /// Builds a finished trace from `(window_size, packets_at_start)` pairs.
    fn crafted(n: u64, windows: &[(u64, u64)]) -> ProtocolTrace {
        let mut elapsed = 0;
        let records = windows
            .iter()
            .enumerate()
            .map(|(k, &(w, m))| {
                let next = windows.get(k + 1).map_or(0, |&(_, m)| m);
                elapsed += w;
                WindowRecord {
                    window_index: k as u64,
                    window_size: w,
                    packets_at_start: m,
                    successes: m - next,
                    slots_elapsed_total: elapsed,
                }
            })
            .collect();
        ProtocolTrace {
            n_packets: n,
            records,
            makespan_slots: Some(elapsed),
            truncated: false,
        }
    }

    fn cases(audit: &RecursionAudit, i: u64) -> Vec<AuditCase> {
        audit.entries.iter().filter(|e| e.i == i).map(|e| e.case).collect()
    }

    #[test]
    fn fb_first_window_cap_is_064_m0() {
        let n = 100_000;
        let w = n + 317;
        let trace = crafted(n, &[(w, n), (w, 63_000), (w, 29_000), (w, 7_400), (w, 540), (w, 3)]);
        let audit = recursion_audit(&trace, ProtocolKind::Fb, n, &AuditConfig::default()).unwrap();
        let first = &audit.entries[0];
        assert_eq!(first.case, AuditCase::DoublyExponentialDecay);
        assert!((first.predicted_cap.unwrap() - 0.64 * n as f64).abs() < 1e-6);
        assert!(audit.violations().next().is_none(), "{:?}", audit.violations().collect::<Vec<_>>());
        assert!(cases(&audit, 4).contains(&AuditCase::SmallRemnant));
        assert!(cases(&audit, 4).contains(&AuditCase::FinishWithin));
        assert!(cases(&audit, 5).contains(&AuditCase::AllClear));
    }

    #[test]
    fn violation_is_reported() {
        let n = 100_000;
        let w = n + 317;
        // m_1 = 0.7 m_0 breaks both the 0.64 m_0 cap and nothing else.
        let trace = crafted(n, &[(w, n), (w, 70_000)]);
        let audit = recursion_audit(&trace, ProtocolKind::Fb, n, &AuditConfig::default()).unwrap();
        let bad: Vec<_> = audit.violations().map(|e| e.case).collect();
        assert_eq!(bad, vec![AuditCase::DoublyExponentialDecay]);
    }

    #[test]
    fn small_windows_are_not_checked() {
        // Windows smaller than n + sqrt(n) get no backlog check even with
        // terrible outcomes.
        let n = 10_000;
        let trace = crafted(n, &[(20_000, n), (5_000, 9_999), (20_000, 9_000)]);
        let audit = recursion_audit(&trace, ProtocolKind::Custom, n, &AuditConfig::default()).unwrap();
        assert!(cases(&audit, 1).iter().all(|c| *c == AuditCase::None));
        // The decay cap stays off after its precondition broke at window 1.
        assert!(!cases(&audit, 2).contains(&AuditCase::DoublyExponentialDecay));
        assert!(cases(&audit, 2).contains(&AuditCase::QuadraticShrink));
    }

    #[test]
    fn run_decay_needs_halving_floor() {
        let n = 1 << 12;
        let trace = crafted(n, &[(4 * n, n), (2 * n, 900), (n, 800), (n / 4, 700)]);
        let audit = recursion_audit(&trace, ProtocolKind::Stb, n, &AuditConfig::default()).unwrap();
        assert!(cases(&audit, 0).contains(&AuditCase::RunDecay));
        assert!(cases(&audit, 0).contains(&AuditCase::RunStartThird));
        // window 3: n/4 < 4n/8, so the run cap is gated off (m_3 >= n^0.7 = 337)
        assert!(!cases(&audit, 3).contains(&AuditCase::RunDecay));
        assert!(!cases(&audit, 0).contains(&AuditCase::FinishWithin));
    }

    #[test]
    fn stb_base_case_flags_large_remnant() {
        let n = 3000;
        let trace = crafted(n, &[(4 * n, n), (4 * n, 1_500)]);
        let audit = recursion_audit(&trace, ProtocolKind::Stb, n, &AuditConfig::default()).unwrap();
        assert!(audit.violations().any(|e| e.case == AuditCase::RunStartThird));
    }

    #[test]
    fn not_applicable_without_large_window() {
        let trace = crafted(100, &[(2, 100), (4, 99)]);
        assert!(matches!(
            recursion_audit(&trace, ProtocolKind::Beb, 100, &AuditConfig::default()),
            Err(Error::AuditNotApplicable(_))
        ));
    }

    #[test]
    fn empty_backlog_checks_pass() {
        let n = 1000;
        let trace = crafted(n, &[(2000, n), (2000, 0), (2000, 0)]);
        let audit = recursion_audit(&trace, ProtocolKind::Fb, n, &AuditConfig::default()).unwrap();
        assert!(audit.entries.iter().filter(|e| e.i >= 1).all(|e| e.pass));
    }

    #[test]
    fn real_fb_traces_pass_and_tally() {
        let n = 20_000;
        let spec = ScheduleSpec::default_for(ProtocolKind::Fb, n).unwrap();
        let audits: Vec<_> = (0..10)
            .map(|t| {
                let trace = run_protocol(n, spec.schedule().unwrap(), &RngStream::new(3, t), DEFAULT_SLOT_CAP).unwrap();
                recursion_audit(&trace, ProtocolKind::Fb, n, &AuditConfig::default()).unwrap()
            })
            .collect();
        let tallies = AuditTally::collect(n, &audits);
        let first = tallies
            .iter()
            .find(|t| t.case == AuditCase::DoublyExponentialDecay && t.i == 0)
            .unwrap();
        assert_eq!(first.checks, 10);
        for t in tallies.iter().filter(|t| t.case.is_recursion_claim()) {
            assert_eq!(t.violations, 0, "{t:?}");
        }
    }
}
