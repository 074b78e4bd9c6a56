//! Batch laboratory for linearized mixing-layer dynamics. Subcommands
//! discretize the symmetrized generator, verify the spectral and commutator
//! hypotheses, and measure damping rates and enhanced-dissipation scaling,
//! writing deterministic CSV reports.
//!
//! Exit codes: 0 = run completed (pass/fail verdicts live in the data),
//! 1 = compute error, 2 = configuration error.

mod config;
mod report;
mod runs;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{parse_config_file, RawConfig};

#[derive(Parser)]
#[command(
    name = "shearflow-damping-lab",
    version,
    about = "Numerical laboratory for inviscid damping and enhanced dissipation of mixing-layer shear flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Flat key=value configuration file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Profile family: tanh | algebraic | table
    #[arg(long)]
    profile: Option<String>,
    /// Stretching length L of the profile
    #[arg(long = "L")]
    l: Option<f64>,
    /// Algebraic decay order k (algebraic profile only, k >= 2)
    #[arg(long)]
    k: Option<u32>,
    /// Path to a custom-table profile (header: y U Uprime Uprimeprime)
    #[arg(long)]
    table: Option<PathBuf>,
    /// Streamwise wavenumber (nonzero integer)
    #[arg(long)]
    alpha: Option<i32>,
    /// Viscosity, or comma list for the enhanced scan
    #[arg(long)]
    nu: Option<String>,
    /// Interior grid nodes
    #[arg(long = "N")]
    n: Option<usize>,
    /// Domain half-width (default 40 * max(1, L))
    #[arg(long = "Y")]
    y: Option<f64>,
    /// Spectral window core as `lo,hi` (default -0.4,0.4)
    #[arg(long)]
    window: Option<String>,
    /// Bump transition width (default 0.1 * window width)
    #[arg(long)]
    delta_g: Option<f64>,
    /// Weight orders for the damping fits, comma list (default 1,2)
    #[arg(long)]
    k_list: Option<String>,
    /// Width of the Gaussian seed for prepared data (default 0.75)
    #[arg(long)]
    data_width: Option<f64>,
    /// Trapezoidal step size (default: largest stable-accuracy step)
    #[arg(long)]
    dt: Option<f64>,
    /// Override of the fit/scan end time
    #[arg(long)]
    tmax: Option<f64>,
    /// Output directory (default ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sweep axis: comma list of L values
    #[arg(long = "L-list")]
    l_list: Option<String>,
    /// Sweep axis: comma list of alpha values
    #[arg(long)]
    alpha_list: Option<String>,
    /// Max number of sweep tuples (default 256)
    #[arg(long)]
    sweep_cap: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Hypothesis checks, Schrodinger ground state, coercivity, spectrum confinement
    Spectrum(CommonArgs),
    /// Localized commutator-positivity cover with width bisection
    Mourre(CommonArgs),
    /// Inviscid weighted-norm and velocity decay fits
    Damping(CommonArgs),
    /// Viscous decay fits plus the viscous-vs-inviscid gap report
    ViscousDamping(CommonArgs),
    /// Half-life scan of the anisotropic functional over a viscosity list
    Enhanced(CommonArgs),
    /// Cross-product sweep over L/alpha/nu wrapping another subcommand
    Sweep {
        /// Subcommand to run per tuple: spectrum | mourre | damping | viscous-damping
        #[arg(long)]
        run: String,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn to_raw(a: &CommonArgs) -> RawConfig {
    RawConfig {
        profile: a.profile.clone(),
        l: a.l,
        k_order: a.k,
        table_path: a.table.clone(),
        alpha: a.alpha,
        nu: a.nu.clone(),
        n: a.n,
        y_half: a.y,
        window: a.window.clone(),
        delta_g: a.delta_g,
        k_list: a.k_list.clone(),
        data_width: a.data_width,
        dt: a.dt,
        t_max: a.tmax,
        out: a.out.clone(),
        l_list: a.l_list.clone(),
        alpha_list: a.alpha_list.clone(),
        sweep_cap: a.sweep_cap,
    }
}

fn load(common: &CommonArgs) -> Result<config::RunConfig, config::ConfigError> {
    let file = match &common.config {
        Some(path) => parse_config_file(path)?,
        None => RawConfig::default(),
    };
    to_raw(common).merged_over(file).validate()
}

fn main() -> ExitCode {
    // deterministic kernels: identical configs must produce byte-identical CSVs
    faer::set_global_parallelism(faer::Par::Seq);
    let cli = Cli::parse();
    let started = Instant::now();
    let (common, runner): (&CommonArgs, &str) = match &cli.command {
        Command::Spectrum(c) => (c, "spectrum"),
        Command::Mourre(c) => (c, "mourre"),
        Command::Damping(c) => (c, "damping"),
        Command::ViscousDamping(c) => (c, "viscous-damping"),
        Command::Enhanced(c) => (c, "enhanced"),
        Command::Sweep { run, common } => (common, Box::leak(run.clone().into_boxed_str())),
    };
    let cfg = match load(common) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match &cli.command {
        Command::Spectrum(_) => runs::run_spectrum(&cfg).map(|r| vec![r]),
        Command::Mourre(_) => runs::run_mourre(&cfg).map(|r| vec![r]),
        Command::Damping(_) => runs::run_damping(&cfg).map(|r| vec![r]),
        Command::ViscousDamping(_) => runs::run_viscous_damping(&cfg).map(|r| vec![r]),
        Command::Enhanced(_) => runs::run_enhanced(&cfg).map(|r| vec![r]),
        Command::Sweep { .. } => runs::run_sweep(&cfg, runner),
    };
    match outcome {
        Ok(records) => {
            for r in &records {
                r.print();
            }
            println!(
                "completed {} record(s) in {:.3} s",
                records.len(),
                started.elapsed().as_secs_f64()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("compute error: {e}");
            ExitCode::from(1)
        }
    }
}
