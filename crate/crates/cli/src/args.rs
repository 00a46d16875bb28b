use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use quench_core::experiments::DEFAULT_CYCLES;
use quench_core::propagator::DEFAULT_DT_NS;

/// Emitter coupled to a resonator array: free decay, coupling quenches and
/// Zeno / anti-Zeno classification.
#[derive(Debug, Parser)]
#[command(name = "quench", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Uninterrupted decay: population, site populations, rates and Zeno time.
    Free {
        #[command(flatten)]
        common: Common,
        /// Simulated time in ns.
        #[arg(long, default_value_t = 70.0)]
        t_end: f64,
        /// Output spacing in ns.
        #[arg(long, default_value_t = DEFAULT_DT_NS)]
        dt: f64,
    },
    /// One quench: coupling on for tau, off for delta, on for tau.
    Quench {
        #[command(flatten)]
        common: Common,
        /// On-stage duration in ns.
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
        /// Off-stage duration in ns.
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        /// Output spacing in ns.
        #[arg(long, default_value_t = DEFAULT_DT_NS)]
        dt: f64,
    },
    /// Periodic quench compared with free decay and ideal measurement.
    Zeno {
        #[command(flatten)]
        common: Common,
        /// On-stage duration in ns.
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
        /// Off-stage duration in ns.
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        /// Number of (on, off) cycles before the closing on-stage.
        #[arg(long, default_value_t = DEFAULT_CYCLES)]
        cycles: usize,
        /// Output spacing in ns.
        #[arg(long, default_value_t = DEFAULT_DT_NS)]
        dt: f64,
    },
    /// Bound-state analysis and long-time trapped population.
    BoundState {
        #[command(flatten)]
        common: Common,
    },
    /// Zeno classification over a grid of (tau, delta, omega0).
    Sweep {
        #[command(flatten)]
        common: Common,
        /// JSON file with arrays "tau_ns", "delta_ns" and "omega0_ghz".
        #[arg(long)]
        grid_file: PathBuf,
        /// Number of (on, off) cycles before the closing on-stage.
        #[arg(long, default_value_t = DEFAULT_CYCLES)]
        cycles: usize,
        /// Output spacing in ns.
        #[arg(long, default_value_t = DEFAULT_DT_NS)]
        dt: f64,
    },
}

/// Configuration file, parameter overrides and output directory.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON configuration file.
    pub config: PathBuf,
    /// Directory for output files (created if missing).
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Emitter frequency in GHz.
    #[arg(long, allow_negative_numbers = true)]
    pub omega0_ghz: Option<f64>,
    /// Resonator frequency in GHz.
    #[arg(long, allow_negative_numbers = true)]
    pub omegac_ghz: Option<f64>,
    /// Hopping between neighbouring resonators in GHz.
    #[arg(long, allow_negative_numbers = true)]
    pub hop_ghz: Option<f64>,
    /// Emitter-resonator coupling in GHz.
    #[arg(long, allow_negative_numbers = true)]
    pub g0_ghz: Option<f64>,
    /// Number of resonators.
    #[arg(long)]
    pub n_sites: Option<u64>,
    /// Chain boundary: open or periodic.
    #[arg(long)]
    pub boundary: Option<String>,
    /// Reference frame: rotating or lab.
    #[arg(long)]
    pub frame: Option<String>,
}
