//! `sigmaflow` — translators of the σ_k^{1/k} curvature flow in Minkowski
//! space: radial construction, barrier envelopes, Legendre duality, the
//! normalized graphical flow, and the invariant check suites.

mod checks;
mod commands;
mod config;
mod manifest;

use clap::{Args, Parser, Subcommand};
use commands::{
    cmd_barriers, cmd_check, cmd_flow, cmd_legendre, cmd_replay, cmd_translator, BarrierArgs,
    FlowCliOverrides, LegendreArgs, TranslatorArgs,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sigmaflow",
    about = "Translating solitons of the sigma_k^(1/k) curvature flow for spacelike graphs in Minkowski space",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the radial translator ODE and export profile + summary.
    Translator(TranslatorCli),
    /// Run the normalized graphical flow (radial or 2-D grid).
    Flow(FlowCli),
    /// Build the sub/supersolution envelopes from theta,phi sphere data.
    Barriers(BarrierCli),
    /// Legendre-transform a translator and residual-check the dual equation.
    Legendre(LegendreCli),
    /// Run an invariant suite; exit code = number of failures.
    Check(CheckCli),
    /// Re-run a recorded manifest and verify byte-identical outputs.
    Replay(ReplayCli),
}

#[derive(Args)]
struct TranslatorCli {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long = "r-max", default_value_t = 4.0)]
    r_max: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 2048)]
    samples: usize,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FlowCli {
    /// Flat key = value config file; CLI flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    /// Domain half-width (grid) or truncation radius (radial).
    #[arg(long)]
    l: Option<f64>,
    /// Grid spacing.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long = "dt-safety")]
    dt_safety: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// translator_dirichlet | barrier_dirichlet
    #[arg(long = "bc-mode")]
    bc_mode: Option<String>,
    #[arg(long = "tol-converged")]
    tol_converged: Option<f64>,
    /// radial | grid
    #[arg(long)]
    mode: Option<String>,
    /// Initial data u0 = u^inf + bump * exp(-r^2).
    #[arg(long)]
    bump: Option<f64>,
    #[arg(long = "profile-tol")]
    profile_tol: Option<f64>,
    /// Constant C of the admissibility check sigma_k <= C v.
    #[arg(long = "admissible-c")]
    admissible_c: Option<f64>,
    /// Sphere data CSV for barrier_dirichlet boundary mode.
    #[arg(long = "phi-csv")]
    phi_csv: Option<String>,
    #[arg(long = "m-offset")]
    m_offset: Option<f64>,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BarrierCli {
    /// Uniform theta,phi samples on S^1.
    #[arg(long = "phi")]
    phi_csv: PathBuf,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Envelope offset magnitude M (defaults to the C² bound of phi).
    #[arg(long = "m-offset")]
    m_offset: Option<f64>,
    #[arg(long, default_value_t = 6.0)]
    l: f64,
    #[arg(long, default_value_t = 101)]
    nx: usize,
    /// Radial range of the base translator (must cover L + |p| excursions).
    #[arg(long = "base-r-max", default_value_t = 12.0)]
    base_r_max: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct LegendreCli {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.3)]
    l: f64,
    #[arg(long, default_value_t = 167)]
    nx: usize,
    /// Dual truncation radius tau < 1.
    #[arg(long, default_value_t = 0.8)]
    tau: f64,
    #[arg(long = "nx-dual", default_value_t = 103)]
    nx_dual: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CheckCli {
    /// symfunc | radial | geometry | barriers | flow | legendre | all
    suite: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReplayCli {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Translator(args) => cmd_translator(&TranslatorArgs {
            n: args.n,
            k: args.k,
            a: args.a,
            r_max: args.r_max,
            tol: args.tol,
            samples: args.samples,
            out_dir: args.out_dir,
        }),
        Command::Flow(args) => {
            let overrides = FlowCliOverrides {
                n: args.n,
                k: args.k,
                a: args.a,
                l: args.l,
                h: args.h,
                dt_safety: args.dt_safety,
                t_end: args.t_end,
                bc_mode: args.bc_mode,
                tol_converged: args.tol_converged,
                mode: args.mode,
                bump: args.bump,
                profile_tol: args.profile_tol,
                admissible_c: args.admissible_c,
                phi_csv: args.phi_csv,
                m_offset: args.m_offset,
            };
            cmd_flow(args.config.as_deref(), &overrides, &args.out_dir)
        }
        Command::Barriers(args) => cmd_barriers(&BarrierArgs {
            phi_csv: args.phi_csv,
            k: args.k,
            a: args.a,
            m_offset: args.m_offset,
            l: args.l,
            nx: args.nx,
            base_r_max: args.base_r_max,
            tol: args.tol,
            out_dir: args.out_dir,
        }),
        Command::Legendre(args) => cmd_legendre(&LegendreArgs {
            n: args.n,
            k: args.k,
            a: args.a,
            l: args.l,
            nx: args.nx,
            tau: args.tau,
            nx_dual: args.nx_dual,
            tol: args.tol,
            out_dir: args.out_dir,
        }),
        Command::Check(args) => cmd_check(&args.suite, args.seed, &args.out_dir),
        Command::Replay(args) => cmd_replay(&args.manifest, &args.out_dir),
    };
    match result {
        Ok(code) => ExitCode::from(code.clamp(0, 255) as u8),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
