use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use partial_trace_cli::bisect::run_bisect;
use partial_trace_cli::profile::run_variance_profile;
use partial_trace_cli::study::run_variance_study;
use partial_trace_cli::sweep::run_sweep;
use partial_trace_cli::validate::run_validate;
use partial_trace_cli::{CliError, CliResult, Config, Context};

/// Deflated partial-trace experiments.
#[derive(Parser, Debug)]
#[command(name = "ptrace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Largest number of sites a Hamiltonian may have.
    #[arg(long, global = true)]
    max_n: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// ρ* and observables over the (h, β) grid.
    Sweep,
    /// Repeated runs per (k, m) cell.
    VarianceStudy,
    /// Compare every estimator path with the dense oracle.
    Validate,
    /// Plateaus of the ground-state entropy in h, with Chebyshev nodes.
    BisectH,
    /// Dense variance bound per (β, k).
    VarianceProfile,
}

fn run(cli: Cli) -> CliResult<()> {
    let path = cli
        .config
        .ok_or_else(|| CliError::Config("--config <FILE> is required".into()))?;
    let cfg = Config::load(&path)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let ctx = Context::new(cfg, cli.out_dir, cli.seed, cli.max_n)?;
    match cli.command {
        Command::Sweep => {
            let rows = run_sweep(&ctx)?;
            log::info!("wrote {rows} rows to {}", ctx.out_dir.display());
        }
        Command::VarianceStudy => run_variance_study(&ctx)?,
        Command::Validate => {
            let checks = run_validate(&ctx)?;
            let mut failed = 0;
            for c in &checks {
                println!("{}  {:<58} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(CliError::Validation(format!("{failed} of {} checks failed", checks.len())));
            }
        }
        Command::BisectH => {
            let b = run_bisect(&ctx)?;
            for p in &b.plateaus {
                println!("[{:.9}, {:.9}]  S = {:.12}", p.lo, p.hi, p.value);
            }
            if b.truncated {
                eprintln!("warning: bisection depth limit reached");
            }
        }
        Command::VarianceProfile => {
            run_variance_profile(&ctx)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
