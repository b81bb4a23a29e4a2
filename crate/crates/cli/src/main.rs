//! `vpatch`: run the vortex-patch numerics from the command line.
//!
//! Every subcommand writes CSV/JSON artifacts and a `manifest.json` into the output
//! directory (`--out`, else `$VPATCH_OUT`, else `./vpatch-out`). Exit status is 0 on
//! success, 1 for invalid configuration and 2 when a numerical invariant fails.

mod commands;
mod config;
mod error;
mod output;

use clap::Parser;
use config::{Command, RunConfig, Settings};
use error::CliError;
use output::{write_manifest, Artifacts};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "vpatch", version, about = "Vortex-patch dynamics, spectra, Cantor measures and KAM reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON file with default values for any of the flags below
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// output directory
    #[arg(long, global = true, env = "VPATCH_OUT", default_value = "vpatch-out")]
    out: PathBuf,

    #[command(flatten)]
    settings: Settings,
}

fn execute(cli: Cli) -> Result<PathBuf, CliError> {
    let start = Instant::now();
    let file = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let settings = file.merged(&cli.settings);
    settings.validate()?;
    if let Some(jobs) = settings.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))?;
    }
    let run = RunConfig { command: cli.command, settings, output: cli.out };
    let mut art = Artifacts::create(&run.output)?;
    let outcome = commands::run(run.command, &run.settings, &mut art);
    write_manifest(&mut art, &run, start.elapsed().as_secs_f64())?;
    outcome.map(|_| art.dir().to_path_buf())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(dir) => {
            println!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
