//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Common};
use crate::config::{describe_defaults, ConfigDocument};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "neurosim", version, about = "Behavioral simulator for subthreshold neuromorphic circuits")]
pub struct Cli {
    /// Print the resolved configuration of FILE in canonical form and exit.
    #[arg(long, value_name = "FILE")]
    pub print_config: Option<PathBuf>,

    /// Print every configuration key with its default value and exit.
    #[arg(long)]
    pub print_defaults: bool,

    /// Override a configuration entry, e.g. `--set neuron.I_thr=150pA`.
    /// May be repeated; applied in order after the config file.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Configuration file; defaults are used when omitted.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory receiving every output file.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Also render the primary chart as SVG.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured network and record traces, spikes and AER events.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Simulated time, e.g. `500ms`.
        #[arg(long)]
        duration: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit the synapse time constant over a sweep of I_tau.
    FitTau {
        #[command(flatten)]
        common: CommonArgs,
        /// `I_tau=1fA,5fA,...`; defaults to 1 fA through 500 fA.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Firing rate against DC input current.
    Fi {
        #[command(flatten)]
        common: CommonArgs,
        /// `START:STOP:STEPS`, both ends included, e.g. `0A:2nA:21`.
        #[arg(long)]
        iin_grid: String,
        /// `I_ref=...`, `gain_ratio=...` or `I_thr=...`: one curve per value.
        #[arg(long)]
        sweep_bias: Option<String>,
        /// Simulated time per grid point.
        #[arg(long)]
        duration: Option<String>,
    },
    /// Spike-frequency adaptation under a constant input.
    Adapt {
        #[command(flatten)]
        common: CommonArgs,
        /// Input current, e.g. `400pA`.
        #[arg(long)]
        iin: String,
        #[arg(long)]
        duration: Option<String>,
    },
    /// Energy per spike against firing rate.
    Energy {
        #[command(flatten)]
        common: CommonArgs,
        /// Calibration points `FREQ:ENERGY,...`, e.g. `30Hz:16pJ,2.1kHz:1pJ`.
        /// Without it the `[power]` section is used.
        #[arg(long)]
        calibrate: Option<String>,
        /// Logarithmic frequency grid `F1:F2:STEPS`.
        #[arg(long, default_value = "10Hz:10kHz:31")]
        grid: String,
    },
    /// Firing-rate distribution under device mismatch.
    Mc {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 500)]
        runs: usize,
        /// Mismatch seed; overrides `[mismatch] seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn common(c: &CommonArgs, overrides: &[String]) -> Common {
    Common {
        config: c.config.clone(),
        out: c.out.clone(),
        plot: c.plot,
        overrides: overrides.to_vec(),
    }
}

/// Parses `args` and runs the requested action, writing text output to
/// stdout. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("neurosim: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    if cli.print_defaults {
        print!("{}", describe_defaults(&ConfigDocument::default()));
        return Ok(());
    }
    if let Some(path) = &cli.print_config {
        print!("{}", commands::print_config(Some(path), &cli.overrides)?);
        return Ok(());
    }
    let o = &cli.overrides;
    match &cli.command {
        None => Err(CliError::Usage("no subcommand given; see --help".into())),
        Some(Command::Simulate { common: c, duration, seed }) => {
            commands::simulate(&common(c, o), duration.as_deref(), *seed)
        }
        Some(Command::FitTau { common: c, sweep }) => commands::fit_tau(&common(c, o), sweep.as_deref()),
        Some(Command::Fi {
            common: c,
            iin_grid,
            sweep_bias,
            duration,
        }) => commands::fi(&common(c, o), iin_grid, sweep_bias.as_deref(), duration.as_deref()),
        Some(Command::Adapt { common: c, iin, duration }) => {
            commands::adapt(&common(c, o), iin, duration.as_deref())
        }
        Some(Command::Energy {
            common: c,
            calibrate,
            grid,
        }) => commands::energy(&common(c, o), calibrate.as_deref(), grid),
        Some(Command::Mc { common: c, runs, seed }) => commands::mc(&common(c, o), *runs, *seed),
    }
}

/// Builds the global rayon pool from `NEUROSIM_THREADS` (0 or unset: one
/// thread per core).
pub fn init_thread_pool() -> CliResult<()> {
    let threads = match std::env::var("NEUROSIM_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("NEUROSIM_THREADS='{v}' is not a non-negative integer")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Output(format!("thread pool: {e}")))
}
