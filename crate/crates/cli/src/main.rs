mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gaslab_core::emit::Format;
use gaslab_core::{AppVersion, Function, Pattern};

/// Gas cost simulator for classic, proxy and diamond contract patterns.
#[derive(Debug, Parser)]
#[command(name = "gaslab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write reports, call series and deployment costs.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Report gas including the 21000 base and calldata charges.
        #[arg(long)]
        include_intrinsic: bool,
        /// Base file name the name sequences are built from.
        #[arg(long)]
        seed_name: Option<String>,
    },
    /// Rebuild the aggregate report from a simulate output directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "csv")]
        format: Format,
        #[arg(long)]
        include_reverted: bool,
    },
    /// Print the priced steps of a single call.
    Trace {
        #[arg(long)]
        pattern: Pattern,
        #[arg(long, default_value = "v1")]
        version: AppVersion,
        #[arg(long)]
        call: Function,
        #[arg(long, default_value = "file")]
        name: String,
        /// 32-byte content hash as hex; derived from the name when omitted.
        #[arg(long)]
        hash: Option<String>,
        /// `csv` prints tab-separated text lines.
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// Fit code sizes to cumulative deployment totals and write a scenario file.
    Calibrate {
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recommend a pattern from four yes/no answers.
    Decide {
        /// JSON file with the answers; prompts on stdin when omitted.
        #[arg(long)]
        answers: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate { scenario, out, include_intrinsic, seed_name } => {
            commands::simulate(&scenario, &out, include_intrinsic, seed_name)
        }
        Command::Report { input, format, include_reverted } => commands::report(&input, format, include_reverted),
        Command::Trace { pattern, version, call, name, hash, format } => {
            commands::trace(pattern, version, call, &name, hash.as_deref(), format)
        }
        Command::Calibrate { targets, out } => commands::calibrate(&targets, &out),
        Command::Decide { answers, json } => commands::decide(answers.as_deref(), json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
