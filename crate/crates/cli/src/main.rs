use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use obstacle_cli::{cmd_solve, cmd_sweep, cmd_verify, parse_value, CliError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "obstacle-lab", version, about = "Solve obstacle problems and run free-boundary experiments")]
struct Cli {
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for suites and sweeps (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve once and write the field, summary and free-boundary CSV.
    Solve { config: PathBuf },
    /// Solve (or build the synthetic field) and run the configured suites.
    Verify { config: PathBuf },
    /// One run per value of a dotted config parameter, merged into one table.
    Sweep {
        config: PathBuf,
        /// Dotted parameter path, e.g. `coefficients.t` or `grid.h`.
        #[arg(long)]
        param: String,
        /// Comma-separated values; fractions such as `1/64` are accepted.
        #[arg(long, num_args = 0.., value_delimiter = ',')]
        values: Vec<String>,
    },
}

fn load(cli: &Cli, path: &Path) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.workers == Some(0) {
        return Err(CliError::Config("workers: must be at least 1".into()));
    }
    if let Some(n) = cli.workers {
        // Ignored if a pool already exists; sweeps also build their own.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Solve { config } => {
            let cfg = load(cli, config)?;
            let s = cmd_solve(&cfg)?;
            println!(
                "[solve] {} converged in {} iterations, residual {:.3e}, {} free-boundary nodes; outputs in {}",
                s.method,
                s.iterations,
                s.residual,
                s.free_boundary_nodes,
                cfg.output_dir.display()
            );
        }
        Command::Verify { config } => {
            let cfg = load(cli, config)?;
            let o = cmd_verify(&cfg)?;
            println!(
                "[verify] {} suite(s) run, all asserted suites passed; outputs in {}",
                o.suites.len(),
                cfg.output_dir.display()
            );
        }
        Command::Sweep { config, param, values } => {
            let cfg = load(cli, config)?;
            let values = values
                .iter()
                .filter(|v| !v.trim().is_empty())
                .map(|v| parse_value(v))
                .collect::<Result<Vec<f64>, _>>()?;
            let o = cmd_sweep(&cfg, param, &values, cli.workers)?;
            println!(
                "[sweep] {} of {} runs succeeded; merged table in {}",
                o.succeeded,
                o.rows,
                cfg.output_dir.join("sweep.csv").display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
