use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intmath::{ceil_lglg, ceil_sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Fb,
    Beb,
    Llb,
    Stb,
    Custom,
}

impl ProtocolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Fb => "fb",
            ProtocolKind::Beb => "beb",
            ProtocolKind::Llb => "llb",
            ProtocolKind::Stb => "stb",
            ProtocolKind::Custom => "custom",
        }
    }

    /// Whether window sizes never decrease.
    pub fn is_monotone(self) -> bool {
        !matches!(self, ProtocolKind::Stb | ProtocolKind::Custom)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fb" => Ok(ProtocolKind::Fb),
            "beb" => Ok(ProtocolKind::Beb),
            "llb" => Ok(ProtocolKind::Llb),
            "stb" => Ok(ProtocolKind::Stb),
            "custom" => Ok(ProtocolKind::Custom),
            other => Err(Error::invalid(
                "protocol",
                format!("unknown protocol `{other}` (expected fb, beb, llb, stb, custom)"),
            )),
        }
    }
}

/// Parameters that determine a window-size sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScheduleSpec {
    /// Fixed backoff: every window has `window` slots.
    Fb { window: u64 },
    /// Binary exponential backoff: 1, 2, 4, ...
    Beb,
    /// Log-log backoff: a plateau of `max(1, ceil(lg lg w))` windows of size
    /// `w`, then `w` doubles.
    Llb { initial: u64 },
    /// Sawtooth backoff: runs `w, w/2, ..., 1` with `w` doubling per run.
    Stb { initial_outer: u64 },
    /// Explicit sizes; the last one repeats forever.
    Custom { sizes: Vec<u64> },
}

impl ScheduleSpec {
    /// Default schedule of a kind for a batch of `n` packets. FB uses
    /// `n + ceil(sqrt(n))`; LLB and STB start from 2.
    pub fn default_for(kind: ProtocolKind, n: u64) -> Result<Self> {
        Ok(match kind {
            ProtocolKind::Fb => ScheduleSpec::Fb {
                window: n + ceil_sqrt(n),
            },
            ProtocolKind::Beb => ScheduleSpec::Beb,
            ProtocolKind::Llb => ScheduleSpec::Llb { initial: 2 },
            ProtocolKind::Stb => ScheduleSpec::Stb { initial_outer: 2 },
            ProtocolKind::Custom => {
                return Err(Error::invalid("protocol", "custom schedules need explicit sizes"))
            }
        })
    }

    pub fn kind(&self) -> ProtocolKind {
        match self {
            ScheduleSpec::Fb { .. } => ProtocolKind::Fb,
            ScheduleSpec::Beb => ProtocolKind::Beb,
            ScheduleSpec::Llb { .. } => ProtocolKind::Llb,
            ScheduleSpec::Stb { .. } => ProtocolKind::Stb,
            ScheduleSpec::Custom { .. } => ProtocolKind::Custom,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ScheduleSpec::Fb { window } => *window >= 1,
            ScheduleSpec::Beb => true,
            ScheduleSpec::Llb { initial } => *initial >= 1,
            ScheduleSpec::Stb { initial_outer } => *initial_outer >= 1,
            ScheduleSpec::Custom { sizes } => !sizes.is_empty() && sizes.iter().all(|&s| s >= 1),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("schedule", "window sizes must be >= 1 and non-empty"))
        }
    }

    pub fn schedule(&self) -> Result<WindowSchedule> {
        self.validate()?;
        Ok(WindowSchedule {
            spec: self.clone(),
            index: 0,
            current: match self {
                ScheduleSpec::Fb { window } => *window,
                ScheduleSpec::Beb => 1,
                ScheduleSpec::Llb { initial } => *initial,
                ScheduleSpec::Stb { initial_outer } => *initial_outer,
                ScheduleSpec::Custom { sizes } => sizes[0],
            },
            outer: match self {
                ScheduleSpec::Stb { initial_outer } => *initial_outer,
                _ => 0,
            },
            plateau_left: match self {
                ScheduleSpec::Llb { initial } => plateau_len(*initial),
                _ => 0,
            },
        })
    }
}

fn plateau_len(w: u64) -> u32 {
    ceil_lglg(w).max(1)
}

/// Cursor over an unbounded window-size sequence. Sizes saturate at
/// `u64::MAX` instead of overflowing.
#[derive(Debug, Clone)]
pub struct WindowSchedule {
    spec: ScheduleSpec,
    index: u64,
    current: u64,
    outer: u64,
    plateau_left: u32,
}

impl WindowSchedule {
    pub fn spec(&self) -> &ScheduleSpec {
        &self.spec
    }

    /// Emits the next window size and advances.
    pub fn next_window(&mut self) -> u64 {
        let size = self.current;
        self.index += 1;
        match &self.spec {
            ScheduleSpec::Fb { .. } => {}
            ScheduleSpec::Beb => self.current = self.current.saturating_mul(2),
            ScheduleSpec::Llb { .. } => {
                self.plateau_left -= 1;
                if self.plateau_left == 0 {
                    self.current = self.current.saturating_mul(2);
                    self.plateau_left = plateau_len(self.current);
                }
            }
            ScheduleSpec::Stb { .. } => {
                if self.current <= 1 {
                    self.outer = self.outer.saturating_mul(2);
                    self.current = self.outer;
                } else {
                    self.current /= 2;
                }
            }
            ScheduleSpec::Custom { sizes } => {
                let i = usize::try_from(self.index).unwrap_or(usize::MAX);
                self.current = *sizes.get(i).unwrap_or_else(|| sizes.last().expect("non-empty"));
            }
        }
        size
    }
}

impl Iterator for WindowSchedule {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        Some(self.next_window())
    }
}

/// Parses one positive integer window size per line. Blank lines and lines
/// starting with `#` are ignored.
pub fn parse_schedule(text: &str) -> Result<ScheduleSpec> {
    let mut sizes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let size: u64 = line.parse().map_err(|e| Error::ScheduleParse {
            line: i + 1,
            message: format!("`{line}` is not a window size: {e}"),
        })?;
        if size == 0 {
            return Err(Error::ScheduleParse {
                line: i + 1,
                message: "window size must be >= 1".into(),
            });
        }
        sizes.push(size);
    }
    if sizes.is_empty() {
        return Err(Error::ScheduleParse {
            line: 0,
            message: "no window sizes found".into(),
        });
    }
    Ok(ScheduleSpec::Custom { sizes })
}
