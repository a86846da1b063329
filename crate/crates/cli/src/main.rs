use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tether_cli::{cmd_bounds, cmd_run, cmd_verify};

/// Event-triggered formation control with connectivity preservation.
///
/// Set TETHER_PRECISION to change the significant digits written (default 12).
#[derive(Parser)]
#[command(name = "tether", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write trace, triggers, bounds, report and plot data.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Certify a recorded trace and trigger log against a scenario.
    Verify {
        trace: PathBuf,
        triggers: PathBuf,
        scenario: PathBuf,
    },
    /// Print beta0, gains and the guaranteed bounds without simulating.
    Bounds { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (mut out, mut err) = (std::io::stdout(), std::io::stderr());
    let code = match cli.command {
        Command::Run { scenario, out: dir } => cmd_run(&scenario, &dir, &mut out, &mut err),
        Command::Verify {
            trace,
            triggers,
            scenario,
        } => cmd_verify(&trace, &triggers, &scenario, &mut out, &mut err),
        Command::Bounds { scenario } => cmd_bounds(&scenario, &mut out, &mut err),
    };
    ExitCode::from(code as u8)
}
