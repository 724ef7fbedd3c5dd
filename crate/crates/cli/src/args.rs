use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "backoff", version, about = "Balls-into-bins analysis and windowed backoff experiments")]
pub struct Cli {
    /// Output format; analytic queries default to table, everything else to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for trials (default: available parallelism).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    /// Add a `timestamp` field (seconds since the Unix epoch) to JSON output.
    #[arg(long, global = true)]
    pub timestamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form and exact quantities.
    #[command(subcommand)]
    Analytic(Analytic),
    /// Single simulations.
    #[command(subcommand)]
    Simulate(Simulate),
    /// Seeded multi-trial experiments with pass/fail verdicts.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Debug, Args)]
pub struct BallsBins {
    /// Number of balls.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Number of bins.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub b: u64,
}

#[derive(Debug, Subcommand)]
pub enum Analytic {
    /// Probability that bin j+1 is a singleton given bins 1..=j are.
    Pj {
        #[command(flatten)]
        params: BallsBins,
        #[arg(long)]
        j: u64,
        /// Also print the exact rational value.
        #[arg(long)]
        exact: bool,
    },
    /// P_j / P_{j+1}, directly and by series expansion.
    Ratio {
        #[command(flatten)]
        params: BallsBins,
        #[arg(long)]
        j: u64,
    },
    /// Expected number of singleton bins.
    Expected {
        #[command(flatten)]
        params: BallsBins,
    },
    /// Singleton-count concentration thresholds and failure bounds.
    Bounds {
        #[command(flatten)]
        params: BallsBins,
        #[arg(long)]
        eps: f64,
    },
    /// Exact check of joint singleton probability against P_0^s for s = 1..=max_s.
    Property1 {
        #[command(flatten)]
        params: BallsBins,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        max_s: u64,
    },
    /// Above, below or gap.
    Regime {
        #[command(flatten)]
        params: BallsBins,
    },
    /// Exact probability that a fixed set of s bins are all singletons.
    Joint {
        #[command(flatten)]
        params: BallsBins,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        s: u64,
    },
    /// Chernoff tail bounds for a sum with the given mean.
    Chernoff {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        mean: f64,
    },
    /// Whether P_j is non-increasing in j.
    Monotone {
        #[command(flatten)]
        params: BallsBins,
    },
    /// Both sides of the MGF product inequality, by exact enumeration.
    Mgf {
        #[command(flatten)]
        params: BallsBins,
        #[arg(long)]
        lambda: f64,
        /// Maximum number of enumerated occupancy vectors.
        #[arg(long)]
        cap: Option<u128>,
    },
    /// Lower bound 1 - m^2/w on all m packets clearing a w-slot window.
    Lastwindow {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        w: u64,
        /// Also print the exact probability.
        #[arg(long)]
        exact: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    Fb,
    Beb,
    Llb,
    Stb,
    Custom,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[arg(long, value_enum)]
    pub protocol: Protocol,
    /// Number of packets.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// FB window size (default n + ceil(sqrt(n))).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), conflicts_with = "fb_multiplier")]
    pub window: Option<u64>,
    /// FB window size as a multiple of n, rounded up.
    #[arg(long)]
    pub fb_multiplier: Option<f64>,
    /// Initial LLB window or initial STB outer window (default 2).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub initial: Option<u64>,
    /// Window sizes for the custom protocol, one per line.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Stop once the next window would pass this many slots.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub slot_cap: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Simulate {
    /// Singleton counts of repeated random placements.
    Singletons {
        #[command(flatten)]
        params: BallsBins,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long)]
        seed: u64,
        /// Include every per-trial count.
        #[arg(long)]
        keep_counts: bool,
    },
    /// One protocol run with a per-window dump.
    Trace {
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stream id within the seed; experiments use the trial index.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Linear constant c in the BEB bound 512 n lg n + c n.
    #[arg(long)]
    pub beb_c: Option<f64>,
    /// STB constant (default: bundled calibration).
    #[arg(long)]
    pub c_stb: Option<f64>,
    /// LLB constant (default: bundled calibration).
    #[arg(long)]
    pub c_llb: Option<f64>,
    /// K in the small-remnant audit m_{i+1} <= K n^0.4.
    #[arg(long)]
    pub case2_k: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Experiment {
    /// Makespan statistics with bound verdicts and recursion audits.
    Makespan {
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Empirical violation rates of the singleton concentration bounds.
    Concentration {
        #[command(flatten)]
        params: BallsBins,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Rate at which m packets all clear a w-slot window.
    Lastwindow {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        w: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Per-window recursion audit of one trace.
    Audit {
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long)]
        case2_k: Option<f64>,
    },
    /// Measure the STB and LLB makespan constants.
    Calibrate {
        #[arg(long, default_value_t = 4096)]
        n: u64,
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = backoff_core::harness::CALIBRATION_HEADROOM)]
        headroom: f64,
    },
}
