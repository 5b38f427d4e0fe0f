//! `pcadp`: privatize image databases and measure the privacy-accuracy trade-off.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use pcadp_core::ErrorKind;

use config::{KeyArgs, Settings};

#[derive(Debug, Parser)]
#[command(name = "pcadp", version, about = "PCA-domain Laplace privatization of image databases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Privatize a database and write images plus a run manifest to --out
    Privatize(KeyArgs),
    /// Train the linear inspector and sweep accuracy over --epsilons x --ds
    Sweep(KeyArgs),
    /// Write image grids of privatized samples for every epsilon and d
    Montage(KeyArgs),
    /// Print a run manifest summary
    Inspect(KeyArgs),
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    type Run = fn(&Settings) -> pcadp_core::Result<()>;
    let (name, args, run): (&str, &KeyArgs, Run) = match &cli.command {
        Command::Privatize(a) => ("privatize", a, commands::privatize),
        Command::Sweep(a) => ("sweep", a, commands::sweep_cmd),
        Command::Montage(a) => ("montage", a, commands::montage_cmd),
        Command::Inspect(a) => ("inspect", a, commands::inspect),
    };
    let result = Settings::resolve(args).and_then(|s| run(&s));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.kind() == ErrorKind::Usage {
                let mut cmd = Cli::command();
                cmd.build();
                if let Some(sub) = cmd.find_subcommand_mut(name) {
                    eprintln!("\n{}", sub.render_usage());
                    eprintln!("For more information, try 'pcadp {name} --help'.");
                }
            }
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
