//! Config-driven scenario runner for the `nhdyn` engines.

pub mod config;
pub mod output;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::Overrides;
use run::RunError;

pub const EXIT_OK: i32 = 0;
/// IO failures and failed verification criteria.
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "nhdyn",
    version,
    about = "Non-Hermitian quantum and classical dynamics scenarios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario from a TOML config file.
    Run {
        config: PathBuf,
        /// Scenario name; overrides `scenario` in the file.
        #[arg(long)]
        scenario: Option<String>,
        /// Output directory; overrides `out_dir` in the file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override a config key, e.g. `--set gamma=0.05`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

/// Parses `args`, runs the scenario and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let Command::Run {
        config,
        scenario,
        out,
        set,
    } = cli.command;
    let overrides = Overrides {
        scenario,
        out_dir: out,
        set,
    };
    let config = match config::load(&config, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run::run(&config) {
        Ok(report) => {
            for note in &report.notes {
                eprintln!("{note}");
            }
            for c in &report.criteria {
                println!("{c}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.passed() {
                EXIT_OK
            } else {
                let failed = report.criteria.iter().filter(|c| !c.passed).count();
                eprintln!("{failed} of {} criteria failed", report.criteria.len());
                EXIT_FAILURE
            }
        }
        Err(e @ RunError::Numerical(_)) => {
            eprintln!("{e}");
            EXIT_NUMERICAL
        }
        Err(e @ RunError::Io(_)) => {
            eprintln!("{e}");
            EXIT_FAILURE
        }
    }
}
