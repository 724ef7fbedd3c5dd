//! Windowed backoff protocols under batched arrivals.
//!
//! A protocol is fully described by its sequence of window sizes; in every
//! window each pending packet picks one slot uniformly at random and succeeds
//! iff no other packet picked the same slot.

mod engine;
mod schedule;

pub use engine::{run_protocol, run_window, ProtocolTrace, WindowOutcome, WindowRecord, DEFAULT_SLOT_CAP};
pub use schedule::{parse_schedule, ProtocolKind, ScheduleSpec, WindowSchedule};
