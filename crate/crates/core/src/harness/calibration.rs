use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::{run_protocol, ProtocolKind, ScheduleSpec, DEFAULT_SLOT_CAP};
use crate::rng::RngStream;

use super::makespan::llb_scale;
use super::trials::run_trials;

/// Factor applied to a measured mean to obtain an asserted constant.
pub const CALIBRATION_HEADROOM: f64 = 1.5;

const BUNDLED: &str = include_str!("../../data/calibration.json");

/// Measured STB and LLB makespan constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub headroom: f64,
    /// Mean STB makespan divided by `n`.
    pub stb_mean_per_n: f64,
    /// Mean LLB makespan divided by `n lg lg n / lg lg lg n`.
    pub llb_mean_ratio: f64,
    pub c_stb: f64,
    pub c_llb: f64,
}

impl Calibration {
    /// The constants shipped in `data/calibration.json`.
    pub fn bundled() -> Result<Self> {
        Self::from_json(BUNDLED)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cal: Calibration = serde_json::from_str(text)?;
        let finite_positive = |x: f64| x.is_finite() && x > 0.0;
        if ![cal.headroom, cal.stb_mean_per_n, cal.llb_mean_ratio, cal.c_stb, cal.c_llb]
            .into_iter()
            .all(finite_positive)
        {
            return Err(Error::Calibration("constants must be finite and positive".into()));
        }
        Ok(cal)
    }
}

fn mean_makespan(kind: ProtocolKind, n: u64, trials: u64, seed: u64, workers: Option<usize>) -> Result<f64> {
    let spec = ScheduleSpec::default_for(kind, n)?;
    let makespans = run_trials(trials, workers, |t| {
        run_protocol(n, spec.schedule()?, &RngStream::new(seed, t), DEFAULT_SLOT_CAP)
    })?;
    let mut total = 0.0;
    for trace in makespans {
        let m = trace?.makespan_slots.ok_or_else(|| {
            Error::Calibration(format!("{kind} trace at n = {n} hit the slot cap"))
        })?;
        total += m as f64;
    }
    Ok(total / trials as f64)
}

/// Measures mean STB and LLB makespans at `n` and scales them by `headroom`.
pub fn calibrate(n: u64, trials: u64, seed: u64, headroom: f64, workers: Option<usize>) -> Result<Calibration> {
    let scale = llb_scale(n).ok_or_else(|| Error::invalid("n", "must be > 4"))?;
    if !(headroom.is_finite() && headroom >= 1.0) {
        return Err(Error::invalid("headroom", "must be finite and >= 1"));
    }
    // Distinct stream families keep the two protocols' samples independent.
    let stb_mean_per_n = mean_makespan(ProtocolKind::Stb, n, trials, seed, workers)? / n as f64;
    let llb_mean_ratio = mean_makespan(ProtocolKind::Llb, n, trials, seed.wrapping_add(1), workers)? / scale;
    Ok(Calibration {
        n,
        trials,
        seed,
        headroom,
        stb_mean_per_n,
        llb_mean_ratio,
        c_stb: stb_mean_per_n * headroom,
        c_llb: llb_mean_ratio * headroom,
    })
}
