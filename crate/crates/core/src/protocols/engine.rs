use serde::{Deserialize, Serialize};

use crate::ballsbins::{Throw, Thrower};
use crate::error::{Error, Result};
use crate::rng::{RngStream, StreamRng};

use super::schedule::WindowSchedule;

pub const DEFAULT_SLOT_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowOutcome {
    pub successes: u64,
    /// Zero-based slot of the last success inside the window.
    pub last_success_slot: Option<u64>,
}

impl From<Throw> for WindowOutcome {
    fn from(t: Throw) -> Self {
        WindowOutcome {
            successes: t.singletons,
            last_success_slot: t.last_singleton,
        }
    }
}

/// Runs one window of `window_size` slots for `packets` pending packets.
pub fn run_window(packets: u64, window_size: u64, stream: &RngStream) -> Result<WindowOutcome> {
    if window_size == 0 {
        return Err(Error::invalid("window_size", "must be >= 1"));
    }
    let mut rng = stream.generator();
    Ok(Thrower::new().throw(&mut rng, packets, window_size).into())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub window_index: u64,
    pub window_size: u64,
    pub packets_at_start: u64,
    pub successes: u64,
    /// Slots elapsed once this window has been fully played.
    pub slots_elapsed_total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolTrace {
    pub n_packets: u64,
    pub records: Vec<WindowRecord>,
    /// `None` when the trace was truncated.
    pub makespan_slots: Option<u64>,
    pub truncated: bool,
}

impl ProtocolTrace {
    pub fn windows_used(&self) -> usize {
        self.records.len()
    }

    pub fn survivors(&self) -> u64 {
        self.records
            .last()
            .map_or(self.n_packets, |r| r.packets_at_start - r.successes)
    }
}

/// Plays windows from `schedule` until every packet has succeeded or the next
/// window would push the elapsed slot count past `slot_cap`.
pub fn run_protocol(
    n_packets: u64,
    mut schedule: WindowSchedule,
    stream: &RngStream,
    slot_cap: u64,
) -> Result<ProtocolTrace> {
    if n_packets == 0 {
        return Err(Error::invalid("n_packets", "must be >= 1"));
    }
    if slot_cap == 0 {
        return Err(Error::invalid("slot_cap", "must be >= 1"));
    }
    let mut rng: StreamRng = stream.generator();
    let mut thrower = Thrower::new();
    let mut records = Vec::new();
    let mut remaining = n_packets;
    let mut elapsed: u64 = 0;
    let mut index = 0;
    loop {
        let w = schedule.next_window();
        if elapsed.checked_add(w).is_none_or(|end| end > slot_cap) {
            return Ok(ProtocolTrace {
                n_packets,
                records,
                makespan_slots: None,
                truncated: true,
            });
        }
        let outcome: WindowOutcome = thrower.throw(&mut rng, remaining, w).into();
        let start = elapsed;
        elapsed += w;
        records.push(WindowRecord {
            window_index: index,
            window_size: w,
            packets_at_start: remaining,
            successes: outcome.successes,
            slots_elapsed_total: elapsed,
        });
        remaining -= outcome.successes;
        index += 1;
        if remaining == 0 {
            let last = outcome.last_success_slot.expect("final window had a success");
            return Ok(ProtocolTrace {
                n_packets,
                records,
                makespan_slots: Some(start + last + 1),
                truncated: false,
            });
        }
    }
}
