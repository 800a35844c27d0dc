use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use deltaprime::cli::{
    cmd_bound, cmd_check, cmd_evolve, cmd_sweep, write_output, CliError, Format, RunConfig,
    EXIT_NUMERIC,
};

#[derive(Parser)]
#[command(
    name = "deltaprime",
    version,
    about = "Quantum vs semiclassical dynamics for a delta-prime interaction"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// JSON run config; defaults are used for anything left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Evolution time for `evolve`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    t: Option<f64>,
    /// Output file; overrides `output.path`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `output.format`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Exact and semiclassical states at time t on a grid.
    Evolve,
    /// Errors over the hbar grid with a fitted slope.
    Sweep,
    /// Terms of the error bound per (hbar, t).
    Bound,
    /// Run the invariant suite; nonzero exit on any failure.
    Check,
}

fn run(args: Args) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build_global()
        .map_err(|e| CliError::config(format!("--threads: {e}")))?;
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = args.out {
        config.output.path = Some(out);
    }
    if let Some(format) = args.format {
        config.output.format = format;
    }
    let (table, ok) = match args.command {
        Command::Evolve => {
            let t = match (args.t, &config.sweep.times) {
                (Some(t), _) => t,
                (None, Some(ts)) => ts[0],
                (None, None) => return Err(CliError::config("evolve needs --t or sweep.times")),
            };
            (cmd_evolve(&config, t)?, true)
        }
        Command::Sweep => (cmd_sweep(&config)?, true),
        Command::Bound => (cmd_bound(&config)?, true),
        Command::Check => cmd_check(&config),
    };
    write_output(
        config.output.path.as_deref(),
        &table.render(config.output.format),
    )?;
    if let Command::Check = args.command {
        for row in table.rows.iter().filter(|r| r[1] == false) {
            eprintln!(
                "FAILED {}: {}",
                row[0].as_str().unwrap_or_default(),
                row[2].as_str().unwrap_or_default()
            );
        }
    }
    if ok {
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_NUMERIC,
            message: "invariant check failed".into(),
        })
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
