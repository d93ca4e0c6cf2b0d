//! `mtrack`: solve, sweep and simulate censored tracking experiments.
//!
//! Every subcommand except `matrix` reads a TOML config; flags override
//! the matching config keys. `MTRACK_OUT_DIR` overrides the config's output
//! directory and `MTRACK_WORKERS` sets the worker thread count.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use markov_track::{banded_20, format_matrix, load_matrix, tridiagonal_eps, PolicyFamily};

use config::Config;
use run::BudgetRefused;

const DEFAULT_OUT_DIR: &str = "mtrack-out";

#[derive(Parser)]
#[command(name = "mtrack", version, about = "Tracking policies for Markov chains with censored observations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured policy families and write their tables.
    Solve(RunArgs),
    /// Sweep one parameter and write a long-form cost/ratio table.
    Sweep(RunArgs),
    /// Estimate policy costs by Monte Carlo and compare with the exact value.
    Simulate(RunArgs),
    /// Generate or validate transition matrices.
    #[command(subcommand)]
    Matrix(MatrixCommand),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config.
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory (the MTRACK_OUT_DIR variable takes precedence over the config).
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    c_u: Option<f64>,
    #[arg(long)]
    c_l: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated list of optimal, frp, myopic, percentile.
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<PolicyFamily>>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_paths: Option<u64>,
    #[arg(long)]
    traces: Option<usize>,
    #[arg(long)]
    budget: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorKind {
    Tridiagonal,
    Banded20,
}

#[derive(Subcommand)]
enum MatrixCommand {
    /// Print a generated matrix in the text format.
    Generate {
        #[arg(long, value_enum)]
        kind: GeneratorKind,
        /// Largest state index for the tridiagonal chain.
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        /// Write to a file instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check that a matrix file is square and row-stochastic.
    Validate { path: PathBuf },
}

fn resolve(args: &RunArgs) -> Result<(Config, PathBuf)> {
    let mut c = Config::load(&args.config)?;
    macro_rules! apply {
        ($($field:ident),*) => { $( if let Some(v) = args.$field.clone() { c.$field = v; } )* };
    }
    apply!(c_u, c_l, beta, horizon, delta, families, seed, n_paths, traces, budget);
    if args.threshold.is_some() {
        c.threshold = args.threshold;
    }
    let out = args
        .out
        .clone()
        .or_else(|| std::env::var_os("MTRACK_OUT_DIR").map(PathBuf::from))
        .or_else(|| c.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    Ok((c, out))
}

fn configure_workers() -> Result<()> {
    if let Ok(v) = std::env::var("MTRACK_WORKERS") {
        let n: usize = v.parse().with_context(|| format!("MTRACK_WORKERS={v} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn print_table(header: &str, lines: impl IntoIterator<Item = String>) {
    println!("{header}");
    for line in lines {
        println!("{line}");
    }
}

fn matrix_command(cmd: MatrixCommand) -> Result<()> {
    match cmd {
        MatrixCommand::Generate { kind, m, eps, out } => {
            let p = match kind {
                GeneratorKind::Tridiagonal => tridiagonal_eps(m, eps)?,
                GeneratorKind::Banded20 => banded_20(),
            };
            let text = format_matrix(&p);
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
        MatrixCommand::Validate { path } => {
            let p = load_matrix(Path::new(&path))?;
            println!("ok: {} states, row-stochastic", p.n_states());
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    configure_workers()?;
    match cli.command {
        Command::Solve(args) => {
            let (config, out) = resolve(&args)?;
            let rows = run::run_solve(&config, &out)?;
            print_table(
                "policy,anchor_or_b0,cost,fo_cost,ratio",
                rows.iter().map(|r| format!("{},{},{},{},{}", r.policy, r.anchor_or_b0, r.cost, r.fo_cost, r.ratio)),
            );
        }
        Command::Sweep(args) => {
            let (config, out) = resolve(&args)?;
            let rows = run::run_sweep(&config, &out)?;
            print_table(
                "param_name,param_value,policy,anchor_or_b0,cost,fo_cost,ratio",
                rows.iter().map(|r| {
                    format!("{},{},{},{},{},{},{}", r.param_name, r.param_value, r.policy, r.anchor_or_b0, r.cost, r.fo_cost, r.ratio)
                }),
            );
        }
        Command::Simulate(args) => {
            let (config, out) = resolve(&args)?;
            let rows = run::run_simulate(&config, &out)?;
            print_table(
                "policy,anchor_or_b0,n_paths,mean,std_error,analytic,delta_over_se",
                rows.iter().map(|r| {
                    format!("{},{},{},{},{},{},{:.3}", r.policy, r.anchor_or_b0, r.n_paths, r.mean, r.std_error, r.analytic, r.delta_over_se)
                }),
            );
        }
        Command::Matrix(cmd) => matrix_command(cmd)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<BudgetRefused>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
