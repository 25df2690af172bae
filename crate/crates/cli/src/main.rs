use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use g2ghost_cli::{parse_config, run, CliError, Command, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "g2ghost", version, about = "Fermionic and bosonic HBT and ghost-imaging simulator")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Monte Carlo g² scan of D₁ against a fixed D₂.
    HbtScan(RunArgs),
    /// Monte Carlo ghost images of a transmission mask.
    GhostImage(RunArgs),
    /// Closed-form kernels and ghost images.
    Analytic(RunArgs),
    /// Fit a profile model to a 1D table.
    Fit(RunArgs),
    /// Sample a 2D table along a line segment.
    Section(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding run.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores), overriding run.workers.
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Output directory, overriding run.output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(command: Command, args: RunArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut cfg = parse_config(&text, Some(command))?;
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    if let Some(workers) = args.workers {
        cfg.set_workers(workers);
    }
    if let Some(out) = args.out {
        cfg.set_output_dir(out);
    }
    let manifest = run(&cfg)?;
    println!(
        "{}: wrote {} file(s) to {} in {:.2} s",
        manifest.command,
        manifest.outputs.len() + 1,
        cfg.output_dir.display(),
        manifest.wall_time_s
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::HbtScan(a) => (Command::HbtScan, a),
        Sub::GhostImage(a) => (Command::GhostImage, a),
        Sub::Analytic(a) => (Command::Analytic, a),
        Sub::Fit(a) => (Command::Fit, a),
        Sub::Section(a) => (Command::Section, a),
    };
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("g2ghost: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
