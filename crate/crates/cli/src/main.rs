//! Command-line front end: expectation tables, density grids, dynamics
//! diagnostics, kernel reports, and the library invariant suite, all emitted
//! as CSV or JSON.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical/tolerance failure.

mod commands;
mod output;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "phasespace",
    about = "Quantum phase-space densities: positive factorized vs point-split constructions",
    version,
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Unit system: natural (hbar = m = omega = 1) or explicit
    #[arg(long, global = true, value_enum, ignore_case = true, default_value_t = Units::Natural)]
    units: Units,
    /// Particle mass (required with --units explicit)
    #[arg(long, global = true)]
    m: Option<f64>,
    /// Oscillator frequency (required with --units explicit)
    #[arg(long, global = true)]
    omega: Option<f64>,
    /// Reduced Planck constant (required with --units explicit)
    #[arg(long, global = true)]
    hbar: Option<f64>,
    /// Output format
    #[arg(long, global = true, value_enum, ignore_case = true, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Output path (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Tolerance override for the command's pass/fail gate
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for randomized choices (verify)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Units {
    Natural,
    Explicit,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum RuleArg {
    A,
    B,
    Cohen,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum KernelArg {
    /// The ratio kernel that maps onto the factorized density
    A2,
    /// f = 1 (reproduces the point-split density)
    Unity,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum PotentialArg {
    Harmonic,
    Quartic,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum MomentRuleArg {
    A,
    B,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Expectation comparison table for eigenstates 0..=nmax
    Table1 {
        /// Highest eigenstate index (<= 10)
        #[arg(long, default_value_t = 3)]
        nmax: u32,
    },
    /// Density samples F(x,p) under one construction rule
    Grid {
        /// Construction rule
        #[arg(long, value_enum, ignore_case = true)]
        rule: RuleArg,
        /// Eigenstate index
        #[arg(long, default_value_t = 0)]
        n: u32,
        /// Points along x
        #[arg(long, default_value_t = 257)]
        nx: usize,
        /// Points along p
        #[arg(long, default_value_t = 257)]
        np: usize,
        /// Half-width of the x window (defaults to the state's natural extent)
        #[arg(long)]
        lx: Option<f64>,
        /// Half-width of the p window
        #[arg(long)]
        lp: Option<f64>,
        /// Kernel for --rule cohen
        #[arg(long, value_enum, ignore_case = true, default_value_t = KernelArg::A2)]
        kernel: KernelArg,
    },
    /// Expectation values <x^nx p^mp> under either or both rules
    Moments {
        /// Eigenstate index (ignored when packet flags are given)
        #[arg(long, default_value_t = 0)]
        n: u32,
        /// Packet centre (switches the state to a Gaussian packet)
        #[arg(long)]
        x0: Option<f64>,
        /// Packet momentum
        #[arg(long)]
        p0: Option<f64>,
        /// Packet width
        #[arg(long)]
        sigma: Option<f64>,
        /// Power of x
        #[arg(long, default_value_t = 2)]
        nx: u32,
        /// Power of p
        #[arg(long, default_value_t = 2)]
        mp: u32,
        /// Correspondence rule
        #[arg(long, value_enum, ignore_case = true, default_value_t = MomentRuleArg::Both)]
        rule: MomentRuleArg,
    },
    /// Propagate a packet and write the trajectory with residual columns
    Ehrenfest {
        #[arg(long, value_enum, ignore_case = true, default_value_t = PotentialArg::Harmonic)]
        potential: PotentialArg,
        /// Quartic coefficient (with --potential quartic)
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        /// Packet centre
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
        /// Packet momentum
        #[arg(long, default_value_t = 0.0)]
        p0: f64,
        /// Packet width (defaults to the coherent width sqrt(hbar/2mw))
        #[arg(long)]
        sigma: Option<f64>,
        /// Time step
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Total time (steps = round(tmax/dt))
        #[arg(long)]
        tmax: Option<f64>,
        /// Number of steps (overrides --tmax)
        #[arg(long)]
        steps: Option<usize>,
        /// Half-width of the position grid
        #[arg(long)]
        lx: Option<f64>,
        /// Grid points
        #[arg(long, default_value_t = 2048)]
        npoints: usize,
    },
    /// Kernel grid and round-trip report for the generalized construction
    Cohen {
        /// Eigenstate index (ignored when packet flags are given)
        #[arg(long, default_value_t = 0)]
        n: u32,
        /// Packet centre (switches the state to a Gaussian packet)
        #[arg(long)]
        x0: Option<f64>,
        /// Packet momentum
        #[arg(long)]
        p0: Option<f64>,
        /// Packet width
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, value_enum, ignore_case = true, default_value_t = KernelArg::A2)]
        kernel: KernelArg,
        /// Denominator mask threshold (relative)
        #[arg(long, default_value_t = 1e-8)]
        epsilon: f64,
        /// Minimum acceptable coverage of the required support
        #[arg(long, default_value_t = 0.99)]
        coverage_min: f64,
        /// Kernel grid points along theta
        #[arg(long, default_value_t = 129)]
        ntheta: usize,
        /// Kernel grid points along tau
        #[arg(long, default_value_t = 129)]
        ntau: usize,
    },
    /// Run the library invariant suite
    Verify {
        /// Run only checks whose name contains this substring
        #[arg(long)]
        only: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests are successful exits; everything else is
            // a usage error (exit 1)
            let kind = err.kind();
            let _ = err.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CmdError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(commands::CmdError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
        Err(commands::CmdError::Io(err)) => {
            eprintln!("io error: {err}");
            ExitCode::from(2)
        }
    }
}
