use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use percept_cli::Command;

/// Online change-point detection on persistence diagram streams.
#[derive(Debug, Parser)]
#[command(name = "percept", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match percept_cli::run(args.command, &args.config, args.seed, args.out) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("percept: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
