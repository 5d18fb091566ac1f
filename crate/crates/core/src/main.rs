use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use sampdens::cli::{execute, Command, Invocation, EXIT_OK, EXIT_VALIDATION};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CommandArg {
    Generate,
    Analyze,
    Verify,
    Report,
}

/// Density functionals, singular weights and frame experiments for
/// sampling and interpolation in Fock and Bergman spaces.
#[derive(Debug, Parser)]
#[command(name = "sampdens", version)]
struct Args {
    #[arg(value_enum)]
    command: CommandArg,
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to SAMPDENS_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_VALIDATION as u8 } else { EXIT_OK as u8 });
        }
    };
    let command = match args.command {
        CommandArg::Generate => Command::Generate,
        CommandArg::Analyze => Command::Analyze,
        CommandArg::Verify => Command::Verify,
        CommandArg::Report => Command::Report,
    };
    let inv = Invocation { out: args.out, seed: args.seed, threads: args.threads };
    let env = std::env::var("SAMPDENS_THREADS").ok();
    match execute(command, &args.config, &inv, env.as_deref()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sampdens: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
