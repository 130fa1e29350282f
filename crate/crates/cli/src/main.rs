use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use riccati_cli::{run_order_study, run_table, run_trajectory, CliError, ExperimentConfig, Table};

#[derive(Parser)]
#[command(name = "riccati", version, about = "Exponential integrators for matrix Riccati equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Relative error at t_end for every (scheme, h) pair.
    Table(Opts),
    /// F-norm of the solution and the reference at every step.
    Trajectory(Opts),
    /// Errors and convergence slopes over a geometric sequence of h.
    Order(Opts),
    /// Print the effective configuration as a loadable config file.
    ShowConfig(Opts),
}

#[derive(Args)]
struct Opts {
    /// key = value file, applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// fdm-sym:k=<n>, fdm-nonsym:k=<n>, scalar-tanh or dir:<path>.
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated scheme names.
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated step sizes.
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    /// Gauss–Legendre nodes for the low-rank φ-sums.
    #[arg(long)]
    nodes: Option<String>,
    /// Compression tolerance, or `auto` for n·ε.
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    krylov_m: Option<String>,
    /// dense or krylov.
    #[arg(long)]
    exp_mode: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Timed runs per cell; the median is reported.
    #[arg(long)]
    repeat: Option<String>,
    /// Output directory (default: stdout).
    #[arg(long)]
    out: Option<String>,
}

impl Opts {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.merge_file(path)?;
        }
        let flags = [
            ("problem", &self.problem),
            ("schemes", &self.scheme),
            ("h", &self.h),
            ("t_end", &self.t_end),
            ("nodes", &self.nodes),
            ("tol", &self.tol),
            ("krylov_m", &self.krylov_m),
            ("exp_mode", &self.exp_mode),
            ("seed", &self.seed),
            ("repeat", &self.repeat),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

fn emit(table: Table, cfg: &ExperimentConfig) -> Result<(), CliError> {
    match &cfg.out {
        Some(dir) => {
            let path = table.write_to(dir)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Table(o) => {
            let cfg = o.resolve()?;
            emit(run_table(&cfg)?, &cfg)
        }
        Command::Trajectory(o) => {
            let cfg = o.resolve()?;
            emit(run_trajectory(&cfg)?, &cfg)
        }
        Command::Order(o) => {
            let cfg = o.resolve()?;
            emit(run_order_study(&cfg)?, &cfg)
        }
        Command::ShowConfig(o) => {
            print!("{}", o.resolve()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("riccati: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
