use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qrnn_cli::config::ExperimentConfig;
use qrnn_cli::error::exit;
use qrnn_cli::runner;
use qrnn_cli::{CliError, CliResult, Task};

#[derive(Parser)]
#[command(
    name = "qrnn",
    version,
    about = "Train and evaluate quantum recurrent neural networks"
)]
struct Cli {
    /// Experiment config file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed for Hamiltonian draws; overrides `master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the task's series to data.csv and data.svg.
    GenData {
        /// cosine, triangle or spin; overrides `task`.
        #[arg(long)]
        task: Option<Task>,
    },
    /// Train one Hamiltonian draw.
    Train {
        /// cosine, triangle or spin; overrides `task`.
        #[arg(long)]
        task: Option<Task>,
        /// Index of the Hamiltonian draw.
        #[arg(long, default_value_t = 0)]
        seed_index: u64,
    },
    /// Evaluate a saved parameter file.
    Predict {
        /// Parameter file written by `train` or `demo`.
        #[arg(long)]
        params: PathBuf,
    },
    /// Train every draw and keep the best on the test window.
    Demo {
        /// cosine, triangle or spin; overrides `task`.
        #[arg(long)]
        task: Option<Task>,
    },
    /// Sweep the evolution time on the configured task.
    TauSweep {
        /// Comma-separated grid; overrides `tau_grid`.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Compare the three gradient methods on a small instance.
    GradCheck,
}

fn load_config(cli: &Cli, task: Option<Task>) -> CliResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::for_task(task.unwrap_or(Task::Cosine)),
    };
    // with a config file, --task switches the series but keeps the file's tau
    if let Some(task) = task {
        cfg.task = task;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::GenData { task } => {
            let cfg = load_config(cli, *task)?;
            let path = runner::run_gen_data(&cfg)?;
            println!("wrote {}", path.display());
        }
        Command::Train { task, seed_index } => {
            let cfg = load_config(cli, *task)?;
            let o = runner::run_train(&cfg, *seed_index)?;
            println!(
                "seed {} [{}]: test MSE {:e}",
                o.seed_index,
                o.status(),
                o.test_mse().unwrap_or(f64::NAN)
            );
        }
        Command::Predict { params } => {
            let cfg = load_config(cli, None)?;
            let e = runner::run_predict(&cfg, params)?;
            println!("test MSE {:e}", e.test_mse);
        }
        Command::Demo { task } => {
            let cfg = load_config(cli, *task)?;
            let report = runner::run_demo(&cfg)?;
            for o in &report.outcomes {
                println!(
                    "seed {:>2}: {:<12e} {}",
                    o.seed_index,
                    o.test_mse().unwrap_or(f64::NAN),
                    o.status()
                );
            }
            let best = report.best_outcome();
            println!(
                "best seed {} with test MSE {:e}",
                best.seed_index,
                report.best_mse()
            );
        }
        Command::TauSweep { grid } => {
            let mut cfg = load_config(cli, None)?;
            if let Some(grid) = grid {
                cfg.tau_grid = grid.clone();
            }
            let rows = runner::run_tau_sweep(&cfg, &cfg.tau_grid)?;
            for (tau, m, n) in runner::sweep_medians(&cfg.tau_grid, &rows) {
                println!(
                    "tau {tau:>6}: median MSE {:e} over {n} seeds",
                    m.unwrap_or(f64::NAN)
                );
            }
        }
        Command::GradCheck => {
            let cfg = load_config(cli, None)?;
            let report = runner::run_grad_check(&cfg)?;
            print!("{}", report.to_text());
            if !report.passed {
                return Err(CliError::CheckFailed(format!(
                    "analytic gradients differ by {:e}",
                    report.sensitivity_vs_shift
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
